#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "smtlog/bench/bench.hpp"
#include "smtlog/datalog/eval.hpp"
#include "smtlog/datalog/parser.hpp"
#include "support.hpp"

using namespace smtlog;
using namespace smtlog::dl;

namespace {

EvalResult eval_with(const Program& prog, Strategy st, IssueOrder order,
                     QueryCache* cache = nullptr, QueryObserver obs = {},
                     uint32_t workers = 1) {
    std::vector<std::unique_ptr<Session>> sessions;
    std::vector<Session*> pool;
    for (uint32_t i = 0; i < workers; ++i) {
        sessions.push_back(open_reference_session(st));
        pool.push_back(sessions.back().get());
    }
    EvalConfig config;
    config.order = order;
    config.worker_count = workers;
    return evaluate(prog, pool, config, cache, std::move(obs));
}

const char* kLine3 = R"(
rel edge(int, int, smt_bool).
rel walk1(int, int, smt_list).
rel walk2(int, int, int, smt_list).
rel path(int, int, smt_list).
walk1(V0, V1, cons(F, nil)) :- edge(V0, V1, F), is_sat(cons(F, nil)).
walk2(V0, V1, V2, cons(F, Fs)) :- walk1(V0, V1, Fs), edge(V1, V2, F), V2 != V0, is_sat(cons(F, Fs)).
path(V0, V1, Fs) :- walk1(V0, V1, Fs).
path(V0, V2, Fs) :- walk2(V0, V1, V2, Fs).
edge(1, 2, #smt{(= v 1)}).
edge(2, 3, #smt{(= v 2)}).
)";

} // namespace

TEST_CASE("parse_program basics") {
    SECTION("minimal rule") {
        Program p = parse_program("rel edge(int, int).\n"
                                  "rel path(int, int).\n"
                                  "path(X, Y) :- edge(X, Y).\n");
        REQUIRE(p.rules.size() == 1);
        REQUIRE(p.relations.size() == 2);
        REQUIRE(p.facts.empty());
    }
    SECTION("fact with an embedded conjunct") {
        Program p = parse_program("rel edge(int, int, smt_bool).\n"
                                  "edge(1, 2, #smt{(= v 1)}).\n");
        REQUIRE(p.facts.size() == 1);
        const Tuple& t = p.facts[0].second;
        REQUIRE(t.size() == 3);
        REQUIRE(t[0].as_int() == 1);
        REQUIRE(t[2].kind() == Value::Kind::Smt);
        REQUIRE(serialize_term(t[2].as_smt().term()) == "(= 1 v)"); // canonical
        REQUIRE(p.smt_var_sorts.at("v") == Sort::integer());
    }
    SECTION("comments and symbols") {
        Program p = parse_program("% a comment\n"
                                  "rel tag(sym, int). % trailing\n"
                                  "tag(alpha, 1).\n");
        REQUIRE(p.facts.size() == 1);
        REQUIRE(p.facts[0].second[0].sym() == "alpha");
    }
}

TEST_CASE("parse_program diagnostics") {
    SECTION("range restriction") {
        REQUIRE_THROWS_AS(parse_program("rel e(int, int).\n"
                                        "rel p(int, int).\n"
                                        "p(X, Z) :- e(X, Y).\n"),
                          RangeRestrictionError);
    }
    SECTION("unknown relation") {
        REQUIRE_THROWS_AS(parse_program("rel p(int).\np(X) :- q(X).\n"),
                          UnknownRelation);
    }
    SECTION("arity mismatch") {
        REQUIRE_THROWS_AS(parse_program("rel p(int, int).\np(1).\n"), ArityError);
    }
    SECTION("reserved relation name") {
        REQUIRE_THROWS_AS(parse_program("rel __csa_edge(int).\n"), ReservedNameError);
    }
    SECTION("reserved SMT variable name") {
        REQUIRE_THROWS_AS(parse_program("rel e(smt_bool).\ne(#smt{__csa_0}).\n"),
                          ReservedNameError);
    }
    SECTION("syntax error carries position") {
        try {
            parse_program("rel p(int)\np(1).\n"); // missing dot
            FAIL("expected SyntaxError");
        } catch (const SyntaxError& e) {
            REQUIRE(e.line() == 2);
        }
    }
    SECTION("non-ground fact") {
        REQUIRE_THROWS_AS(parse_program("rel p(int).\np(X).\n"), SyntaxError);
    }
    SECTION("type conflicts") {
        REQUIRE_THROWS_AS(parse_program("rel p(int).\nrel q(sym).\n"
                                        "p(X) :- q(X).\n"),
                          SyntaxError);
        REQUIRE_THROWS_AS(parse_program("rel p(int).\np(1) :- 1 != beta.\n"),
                          SyntaxError);
    }
    SECTION("is_sat needs an smt_list") {
        REQUIRE_THROWS_AS(parse_program("rel e(smt_bool).\nrel p(smt_bool).\n"
                                        "p(F) :- e(F), is_sat(F).\n"),
                          SyntaxError);
    }
    SECTION("builtins see only bound variables") {
        REQUIRE_THROWS_AS(parse_program("rel e(int).\nrel p(int).\n"
                                        "p(X) :- X != 1, e(X).\n"),
                          SyntaxError);
    }
    SECTION("duplicate declaration") {
        REQUIRE_THROWS_AS(parse_program("rel p(int).\nrel p(int).\n"), SyntaxError);
    }
    SECTION("conflicting SMT variable sorts across facts") {
        REQUIRE_THROWS_AS(parse_program("rel e(smt_bool).\n"
                                        "e(#smt{(= v 1)}).\n"
                                        "e(#smt{(= v true)}).\n"),
                          SyntaxError);
    }
}

TEST_CASE("textbook transitive closure") {
    Program p = parse_program("rel edge(int, int).\nrel path(int, int).\n"
                              "path(X, Y) :- edge(X, Y).\n"
                              "path(X, Z) :- path(X, Y), edge(Y, Z).\n"
                              "edge(1, 2).\nedge(2, 3).\n");
    auto result = eval_with(p, Strategy::Naive, IssueOrder::Dfs);
    auto rows = result.db->rel(1).sorted_rows();
    REQUIRE(rows.size() == 3);
    REQUIRE(rows[0] == Tuple{Value::of_int(1), Value::of_int(2)});
    REQUIRE(rows[1] == Tuple{Value::of_int(1), Value::of_int(3)});
    REQUIRE(rows[2] == Tuple{Value::of_int(2), Value::of_int(3)});
}

TEST_CASE("labeled line graph: contradictory two-edge path is infeasible") {
    Program p = parse_program(kLine3);
    auto result = eval_with(p, Strategy::CSA, IssueOrder::Dfs);
    uint32_t walk2 = *p.find_relation("walk2");
    REQUIRE(result.db->rel(walk2).size() == 0); // v=1 and v=2 conflict
    uint32_t path = *p.find_relation("path");
    REQUIRE(result.db->rel(path).size() == 2); // both single edges feasible
}

TEST_CASE("issuance order") {
    SECTION("dfs keeps parent-extension adjacency (line graph)") {
        Program p = parse_program(kLine3);
        std::vector<std::vector<std::string>> queries;
        eval_with(p, Strategy::Naive, IssueOrder::Dfs, nullptr,
                  [&](const std::vector<Conjunct>& q, const SatResult&, bool) {
                      std::vector<std::string> rendered;
                      for (const Conjunct& c : q)
                          rendered.push_back(serialize_term(c.term()));
                      queries.push_back(std::move(rendered));
                  });
        // Exploration from edge(1,2) must issue [ab] immediately followed by
        // [ab, bc]: the stack discipline preserves path-prefix adjacency.
        std::vector<std::string> ab{"(= 1 v)"};
        std::vector<std::string> abbc{"(= 1 v)", "(= 2 v)"};
        bool adjacent = false;
        for (size_t i = 0; i + 1 < queries.size(); ++i)
            adjacent = adjacent || (queries[i] == ab && queries[i + 1] == abbc);
        REQUIRE(adjacent);
    }
    SECTION("bfs interleaves root frontiers, dfs finishes one root first") {
        const char* two_roots = R"(
rel edge(int, int, smt_bool).
rel walk1(int, int, smt_list).
rel walk2(int, int, int, smt_list).
walk1(V0, V1, cons(F, nil)) :- edge(V0, V1, F), is_sat(cons(F, nil)).
walk2(V0, V1, V2, cons(F, Fs)) :- walk1(V0, V1, Fs), edge(V1, V2, F), V2 != V0, is_sat(cons(F, Fs)).
edge(1, 2, #smt{p}).
edge(5, 6, #smt{q}).
edge(2, 3, #smt{r}).
edge(6, 7, #smt{s}).
)";
        Program p = parse_program(two_roots);
        auto trace = [&](IssueOrder order) {
            std::vector<size_t> lens;
            eval_with(p, Strategy::Naive, order, nullptr,
                      [&](const std::vector<Conjunct>& q, const SatResult&, bool) {
                          lens.push_back(q.size());
                      });
            return lens;
        };
        // bfs: all frontier-1 queries before any frontier-2 query
        auto bfs = trace(IssueOrder::Bfs);
        REQUIRE(bfs == std::vector<size_t>{1, 1, 1, 1, 2, 2});
        // dfs: a frontier-2 query is issued before the last frontier-1 query
        auto dfs = trace(IssueOrder::Dfs);
        REQUIRE(dfs.size() == 6);
        size_t first2 = std::find(dfs.begin(), dfs.end(), 2u) - dfs.begin();
        size_t last1 = dfs.rend() - std::find(dfs.rbegin(), dfs.rend(), 1u) - 1;
        REQUIRE(first2 < last1);
    }
    SECTION("query multiset is order-independent") {
        Program p = parse_program(kLine3);
        auto multiset = [&](IssueOrder order) {
            std::multiset<std::vector<uint64_t>> seen;
            eval_with(p, Strategy::Naive, order, nullptr,
                      [&](const std::vector<Conjunct>& q, const SatResult&, bool) {
                          seen.insert(QueryCache::key_for(q));
                      });
            return seen;
        };
        REQUIRE(multiset(IssueOrder::Dfs) == multiset(IssueOrder::Bfs));
    }
    SECTION("issue_order is a pure reordering") {
        std::vector<int> pending{1, 2, 3, 4};
        REQUIRE(issue_order(pending, IssueOrder::Bfs) == std::vector<int>{1, 2, 3, 4});
        REQUIRE(issue_order(pending, IssueOrder::Dfs) == std::vector<int>{4, 3, 2, 1});
    }
}

TEST_CASE("builtin_is_sat and the query cache") {
    Term v = mk_var("v", Sort::integer());
    Conjunct a = canonicalize(mk_eq(v, mk_int(1)));
    Conjunct b = canonicalize(mk_term("<", {v, mk_int(5)}));
    auto session = open_reference_session(Strategy::Naive);
    QueryCache cache;
    EvalStats stats;

    SECTION("fresh query records a miss; reordered set hits") {
        REQUIRE(builtin_is_sat({a, b}, *session, &cache, UnknownPolicy::TreatFalse,
                               stats, {}, nullptr));
        REQUIRE(stats.cache_misses == 1);
        REQUIRE(builtin_is_sat({b, a}, *session, &cache, UnknownPolicy::TreatFalse,
                               stats, {}, nullptr));
        REQUIRE(stats.cache_hits == 1);
        REQUIRE(session->metrics().checks == 1); // hit never reached the solver
    }
    SECTION("contradiction yields false") {
        Conjunct c = canonicalize(mk_eq(v, mk_int(2)));
        REQUIRE_FALSE(builtin_is_sat({a, c}, *session, &cache,
                                     UnknownPolicy::TreatFalse, stats, {}, nullptr));
    }
    SECTION("unknown policy decides unknown verdicts") {
        // Pre-seed the cache with an Unknown verdict for the key.
        auto key = QueryCache::key_for(std::vector<Conjunct>{a});
        cache.store(key, SatResult::unknown("timeout"));
        REQUIRE_FALSE(builtin_is_sat({a}, *session, &cache,
                                     UnknownPolicy::TreatFalse, stats, {}, nullptr));
        REQUIRE(builtin_is_sat({a}, *session, &cache, UnknownPolicy::TreatTrue,
                               stats, {}, nullptr));
        REQUIRE_THROWS_AS(builtin_is_sat({a}, *session, &cache,
                                         UnknownPolicy::Error, stats, {}, nullptr),
                          EvalError);
    }
    SECTION("cache disagreement is a soundness failure") {
        auto key = QueryCache::key_for(std::vector<Conjunct>{b});
        cache.store(key, SatResult::sat());
        REQUIRE_NOTHROW(cache.store(key, SatResult::sat()));
        REQUIRE_THROWS_AS(cache.store(key, SatResult::unsat()), EvalError);
    }
}

TEST_CASE("fixpoint equals the naive-iteration oracle on random programs") {
    std::mt19937_64 rng(1234);
    for (int i = 0; i < 40; ++i) {
        std::string text = testsupport::random_datalog_program(rng);
        INFO(text);
        Program p = parse_program(text);
        auto engine = eval_with(p, Strategy::Naive, IssueOrder::Dfs);
        testsupport::NaiveOracle oracle(p);
        REQUIRE(testsupport::sorted_database(*engine.db) == oracle.run());
    }
}

TEST_CASE("labeled reachability equals exhaustive simple-path enumeration") {
    std::mt19937_64 rng(777);
    for (int i = 0; i < 5; ++i) {
        bench::GraphSpec spec;
        spec.seed = 1000 + i;
        spec.nodes = 8;
        spec.avg_out_degree = 1.8;
        spec.label_logic = i % 2 ? bench::LabelLogic::Bool : bench::LabelLogic::Lia;
        spec.label_vars = 3;
        auto edges = bench::gen_graph(spec);
        Program p = parse_program(bench::render_benchmark_program(spec, 7));
        auto result = eval_with(p, Strategy::CSA, IssueOrder::Dfs);
        auto expect = testsupport::enumerate_feasible_paths(edges, spec.nodes, 7);
        REQUIRE(testsupport::database_walk_paths(p, *result.db) == expect);
    }
}

TEST_CASE("strategy and order transparency") {
    Program p = parse_program(kLine3);
    auto base = eval_with(p, Strategy::Naive, IssueOrder::Dfs);
    for (Strategy st : {Strategy::PP, Strategy::CSA}) {
        auto other = eval_with(p, st, IssueOrder::Dfs);
        REQUIRE(base.db->equal_sets(*other.db));
    }
    auto bfs = eval_with(p, Strategy::Naive, IssueOrder::Bfs);
    REQUIRE(base.db->equal_sets(*bfs.db));
}

TEST_CASE("cache soundness: disabled vs enabled databases are identical") {
    bench::GraphSpec spec;
    spec.seed = 99;
    spec.nodes = 10;
    spec.avg_out_degree = 1.6;
    spec.label_vars = 2;
    Program p = parse_program(bench::render_benchmark_program(spec, 5));

    QueryCache cache;
    auto with_cache = eval_with(p, Strategy::CSA, IssueOrder::Dfs, &cache);
    auto without = eval_with(p, Strategy::CSA, IssueOrder::Dfs, nullptr);
    REQUIRE(with_cache.db->equal_sets(*without.db));
    // with the cache on, solver checks <= distinct conjunct sets
    REQUIRE(with_cache.stats.cache_misses == cache.size());
    REQUIRE(with_cache.stats.solver.checks == with_cache.stats.cache_misses);
    REQUIRE(with_cache.stats.solver.checks <= without.stats.solver.checks);
}

TEST_CASE("max_path_len caps is_sat query length") {
    Program p = parse_program(kLine3);
    auto session = open_reference_session(Strategy::Naive);
    Session* pool[] = {session.get()};
    EvalConfig config;
    config.max_path_len = 1;
    auto result = evaluate(p, pool, config);
    uint32_t walk1 = *p.find_relation("walk1");
    REQUIRE(result.db->rel(walk1).size() == 2); // single edges still explored
    // two-edge candidates were skipped before reaching the solver
    REQUIRE(result.stats.queries == 2);
}

TEST_CASE("tuple budget aborts runaway programs") {
    Program p = parse_program("rel n(int).\nrel m(int, int).\n"
                              "m(X, Y) :- n(X), n(Y).\n"
                              "n(1). n(2). n(3). n(4). n(5).\n");
    auto session = open_reference_session(Strategy::Naive);
    Session* pool[] = {session.get()};
    EvalConfig config;
    config.tuple_budget = 10;
    REQUIRE_THROWS_AS(evaluate(p, pool, config), BudgetExceeded);
}

TEST_CASE("parallel evaluation derives the same database") {
    bench::GraphSpec spec;
    spec.seed = 123;
    spec.nodes = 12;
    spec.avg_out_degree = 2.0;
    spec.label_vars = 3;
    Program p = parse_program(bench::render_benchmark_program(spec, 5));
    auto sequential = eval_with(p, Strategy::CSA, IssueOrder::Dfs);
    QueryCache cache;
    auto parallel = eval_with(p, Strategy::CSA, IssueOrder::Dfs, &cache, {}, 4);
    REQUIRE(sequential.db->equal_sets(*parallel.db));
}

TEST_CASE("list_to_query reverses cons order") {
    Term v = mk_var("v", Sort::integer());
    Conjunct a = canonicalize(mk_eq(v, mk_int(1)));
    Conjunct b = canonicalize(mk_eq(v, mk_int(2)));
    Value list = Value::cons(b, Value::cons(a, Value::nil())); // b consed last.. first
    auto q = list_to_query(list);
    REQUIRE(q == std::vector<Conjunct>{a, b}); // construction order
}

TEST_CASE("value printing round-trips through the parser") {
    Program p = parse_program("rel e(int, sym, smt_bool, smt_list).\n"
                              "e(-7, beta, #smt{(< v 3)}, "
                              "cons(#smt{(> v 0)}, cons(#smt{(< v 2)}, nil))).\n");
    const Tuple& t = p.facts[0].second;
    std::string rendered = tuple_to_string("e", t);
    Program p2 = parse_program("rel e(int, sym, smt_bool, smt_list).\n" + rendered + "\n");
    REQUIRE(p2.facts[0].second == t);
}
