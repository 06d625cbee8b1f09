#include <catch2/catch_amalgamated.hpp>

#include "smtlog/backend.hpp"
#include "smtlog/solver.hpp"
#include "support.hpp"

using namespace smtlog;

namespace {

Conjunct cj(Term t) { return canonicalize(t); }
Term ivar(const std::string& n) { return mk_var(n, Sort::integer()); }

SolverConfig refsolver_config(std::vector<std::string> extra = {}) {
    SolverConfig config;
    config.command = {testsupport::refsolver_path()};
    for (auto& a : extra) config.command.push_back(std::move(a));
    config.logic = "QF_LIA";
    return config;
}

} // namespace

TEST_CASE("spawn failures surface as SpawnError") {
    SolverConfig config;
    config.command = {"/nonexistent/solver-binary"};
    REQUIRE_THROWS_AS(open_session(config, Strategy::Naive), SpawnError);
}

TEST_CASE("a solver that exits immediately surfaces as a crash") {
    SolverConfig config;
    config.command = {"/bin/false"};
    config.handshake_probe_ms = 200;
    REQUIRE_THROWS_AS(open_session(config, Strategy::Naive), SolverCrash);
}

TEST_CASE("handshake rejection surfaces as HandshakeError") {
    SolverConfig config = refsolver_config();
    config.logic = "NOT_A_LOGIC";
    config.handshake_probe_ms = 2000;
    try {
        open_session(config, Strategy::Naive);
        FAIL("expected HandshakeError");
    } catch (const HandshakeError& e) {
        // Pinned error class: solvers answer with an (error ...) s-expression.
        REQUIRE(std::string(e.what()).find("(error") != std::string::npos);
    }
}

TEST_CASE("all strategies agree with the reference over the wire") {
    std::mt19937_64 rng(777);
    auto queries = testsupport::random_query_sequence(rng);
    for (Strategy st : {Strategy::Naive, Strategy::PP, Strategy::CSA}) {
        auto s = open_session(refsolver_config(), st);
        for (const auto& q : queries) REQUIRE(s->check(q) == reference_check(q));
        s->close();
    }
}

TEST_CASE("get_model over the wire") {
    auto s = open_session(refsolver_config(), Strategy::CSA);
    Term v = ivar("v");
    auto m = s->get_model(std::vector<Conjunct>{cj(mk_eq(v, mk_int(2)))});
    REQUIRE(m.has_value());
    REQUIRE(std::get<BigInt>(m->find("v")->value) == 2);
}

TEST_CASE("timeouts kill the process and report Unknown(timeout)") {
    SolverConfig config = refsolver_config({"--sleep-ms", "3000"});
    config.timeout_ms = 100;
    auto s = open_session(config, Strategy::Naive);
    Term v = ivar("v");
    SatResult r = s->check(std::vector<Conjunct>{cj(mk_eq(v, mk_int(1)))});
    REQUIRE(r.is_unknown());
    REQUIRE(r.unknown_reason == "timeout");
    Metrics m = s->metrics();
    REQUIRE(m.unknown == 1);
    REQUIRE(m.restarts == 1);
}

TEST_CASE("crash recovery: killed solver is restarted and verdicts are preserved") {
    // A bounded conjunct pool keeps the CSA replay (handshake + whole map)
    // well under the --die-after threshold, so every restart makes progress;
    // 30 queries guarantee each strategy crosses the threshold at least once.
    std::mt19937_64 rng(4242);
    std::vector<Conjunct> pool;
    for (int i = 0; i < 10; ++i) pool.push_back(testsupport::random_conjunct(rng));
    std::vector<std::vector<Conjunct>> queries;
    for (int i = 0; i < 30; ++i) {
        std::vector<Conjunct> q;
        for (uint64_t k = 0, n = 1 + rng() % 6; k < n; ++k)
            q.push_back(pool[rng() % pool.size()]);
        queries.push_back(std::move(q));
    }

    for (Strategy st : {Strategy::Naive, Strategy::PP, Strategy::CSA}) {
        INFO(strategy_name(st));
        std::vector<SatResult> expect;
        {
            auto s = open_session(refsolver_config(), st);
            for (const auto& q : queries) expect.push_back(s->check(q));
        }
        // --die-after makes the child exit abruptly mid-sequence, repeatedly.
        SolverConfig dying = refsolver_config({"--die-after", "50"});
        auto s = open_session(dying, st);
        std::vector<SatResult> got;
        for (const auto& q : queries) got.push_back(s->check(q));
        Metrics m = s->close();
        REQUIRE(m.restarts > 0); // the kill actually happened
        REQUIRE(got.size() == expect.size());
        for (size_t i = 0; i < got.size(); ++i) REQUIRE(got[i] == expect[i]);
    }
}

TEST_CASE("crashes surface once restarts are disabled") {
    SolverConfig config = refsolver_config({"--die-after", "6"});
    config.restart_on_crash = false;
    auto s = open_session(config, Strategy::Naive);
    Term v = ivar("v");
    std::vector<Conjunct> q{cj(mk_eq(v, mk_int(1)))};
    bool crashed = false;
    try {
        for (int i = 0; i < 10; ++i) s->check(q);
    } catch (const SolverCrash&) {
        crashed = true;
    }
    REQUIRE(crashed);
}

TEST_CASE("SMTLOG_SOLVER overrides the configured command") {
    ::setenv("SMTLOG_SOLVER", testsupport::refsolver_path().c_str(), 1);
    SolverConfig config;
    config.command = {"/bin/false"}; // would crash without the override
    config.logic = "QF_LIA";
    auto s = open_session(config, Strategy::Naive);
    Term v = ivar("v");
    REQUIRE(s->check(std::vector<Conjunct>{cj(mk_eq(v, mk_int(1)))}).is_sat());
    ::unsetenv("SMTLOG_SOLVER");
}

TEST_CASE("verdict counters always sum to checks") {
    std::mt19937_64 rng(906090);
    auto queries = testsupport::random_query_sequence(rng);
    auto s = open_session(refsolver_config(), Strategy::PP);
    for (const auto& q : queries) s->check(q);
    Metrics m = s->close();
    REQUIRE(m.sat + m.unsat + m.unknown == m.checks);
    REQUIRE(m.checks == queries.size());
}

TEST_CASE("protocol errors carry the solver text") {
    // Drive the backend directly with an undeclared symbol assertion.
    ProcessBackend backend({testsupport::refsolver_path()}, "");
    backend.submit(Command::set_option("print-success", "false"));
    backend.submit(Command::set_logic("QF_LIA"));
    backend.submit(Command::assert_term(mk_eq(ivar("undeclared"), mk_int(1))));
    backend.submit(Command::check_sat());
    try {
        backend.read_verdict(std::chrono::milliseconds(5000));
        FAIL("expected ProtocolError");
    } catch (const ProtocolError& e) {
        REQUIRE(e.solver_text().find("error") != std::string::npos);
    }
    backend.terminate();
}

TEST_CASE("csa replays its map after a restart") {
    // Die every ~30 commands; a CSA session must re-assert its whole map on
    // each restart and still answer correctly from the fresh process.
    SolverConfig dying = refsolver_config({"--die-after", "30"});
    auto s = open_session(dying, Strategy::CSA);
    Term v = ivar("v");
    std::vector<Conjunct> pool;
    for (int i = 0; i < 6; ++i) pool.push_back(cj(mk_eq(v, mk_int(i))));
    for (int round = 0; round < 5; ++round)
        for (int i = 0; i < 6; ++i) {
            std::vector<Conjunct> q{pool[i]};
            if (i > 0) q.push_back(pool[i - 1]);
            SatResult r = s->check(q);
            REQUIRE(r == reference_check(q));
        }
    Metrics m = s->close();
    REQUIRE(m.asserts == 6);          // distinct conjuncts only
    REQUIRE(m.restarts > 0);          // the crash path ran
    REQUIRE(m.replayed_asserts > 0);  // and replayed the map
}
