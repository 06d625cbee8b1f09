#pragma once

// Shared test oracles and generators. Everything here is deliberately
// independent of the engine paths it checks: the naive Datalog oracle
// re-derives fixpoints by whole-database iteration, and the path oracle
// enumerates simple paths directly over the edge list.

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "smtlog/bench/graphgen.hpp"
#include "smtlog/datalog/eval.hpp"
#include "smtlog/datalog/parser.hpp"
#include "smtlog/refcheck.hpp"
#include "smtlog/smtlib.hpp"
#include "smtlog/solver.hpp"

namespace testsupport {

using namespace smtlog;

inline std::string refsolver_path() {
#ifdef SMTLOG_REFSOLVER_PATH
    return SMTLOG_REFSOLVER_PATH;
#else
    return "smtlog-refsolver";
#endif
}

inline std::string test_data_dir() {
#ifdef SMTLOG_TEST_DATA_DIR
    return SMTLOG_TEST_DATA_DIR;
#else
    return "tests/data";
#endif
}

// ---------------------------------------------------------------------------
// Naive-iteration Datalog oracle: evaluate every rule against the full
// database until nothing changes. No deltas, no indexes, no worklist.

class NaiveOracle {
public:
    NaiveOracle(const dl::Program& prog, int ref_bound = kDefaultReferenceBound)
        : prog_(prog), bound_(ref_bound), rows_(prog.relations.size()) {}

    /// Runs to fixpoint and returns per-relation sorted tuple sets.
    std::vector<std::vector<dl::Tuple>> run() {
        for (const auto& [rel, tuple] : prog_.facts) add(rel, tuple);
        bool changed = true;
        while (changed) {
            changed = false;
            for (const dl::Rule& rule : prog_.rules) {
                Env env(rule.var_count);
                changed |= instantiate(rule, env, 0);
            }
        }
        std::vector<std::vector<dl::Tuple>> out;
        for (auto& set : rows_) out.emplace_back(set.begin(), set.end());
        for (auto& rows : out) std::sort(rows.begin(), rows.end(), dl::tuple_less);
        return out;
    }

private:
    struct Env {
        explicit Env(uint32_t n) : values(n), bound(n, false) {}
        std::vector<dl::Value> values;
        std::vector<bool> bound;
    };

    bool add(uint32_t rel, const dl::Tuple& t) {
        return rows_[rel].insert(t).second;
    }

    bool instantiate(const dl::Rule& rule, Env& env, size_t idx) {
        if (idx == rule.body.size()) {
            dl::Tuple head;
            for (const dl::Expr& a : rule.head.args) head.push_back(eval(a, env));
            return add(rule.head.rel, head);
        }
        const dl::Literal& lit = rule.body[idx];
        bool changed = false;
        switch (lit.kind) {
        case dl::Literal::Kind::Rel: {
            // Iterate a snapshot so insertions during this pass do not
            // invalidate iterators; the outer loop re-runs anyway.
            std::vector<dl::Tuple> snapshot(rows_[lit.atom.rel].begin(),
                                            rows_[lit.atom.rel].end());
            for (const dl::Tuple& row : snapshot) {
                Env saved = env;
                if (match_atom(lit.atom, row, env))
                    changed |= instantiate(rule, env, idx + 1);
                env = std::move(saved);
            }
            return changed;
        }
        case dl::Literal::Kind::IsSat: {
            std::vector<Conjunct> query = dl::list_to_query(eval(lit.a, env));
            bool sat = query.empty() || reference_check(query, bound_).is_sat();
            return sat ? instantiate(rule, env, idx + 1) : false;
        }
        case dl::Literal::Kind::Bind: {
            Env saved = env;
            env.values[lit.bind_var] = eval(lit.a, env);
            env.bound[lit.bind_var] = true;
            changed = instantiate(rule, env, idx + 1);
            env = std::move(saved);
            return changed;
        }
        case dl::Literal::Kind::Neq:
            if (eval(lit.a, env) != eval(lit.b, env))
                return instantiate(rule, env, idx + 1);
            return false;
        }
        return false;
    }

    static dl::Value eval(const dl::Expr& e, const Env& env) {
        switch (e.kind) {
        case dl::Expr::Kind::Lit: return e.lit;
        case dl::Expr::Kind::Nil: return dl::Value::nil();
        case dl::Expr::Kind::Var: return env.values[e.var];
        case dl::Expr::Kind::Cons:
            return dl::Value::cons(eval(e.kids[0], env).as_smt(), eval(e.kids[1], env));
        }
        return dl::Value::nil();
    }

    static bool match_expr(const dl::Expr& e, const dl::Value& v, Env& env) {
        switch (e.kind) {
        case dl::Expr::Kind::Lit: return e.lit == v;
        case dl::Expr::Kind::Var:
            if (env.bound[e.var]) return env.values[e.var] == v;
            env.values[e.var] = v;
            env.bound[e.var] = true;
            return true;
        case dl::Expr::Kind::Nil:
            return v.kind() == dl::Value::Kind::List && v.as_list() == nullptr;
        case dl::Expr::Kind::Cons: {
            if (v.kind() != dl::Value::Kind::List || !v.as_list()) return false;
            const dl::ListNode* n = v.as_list();
            return match_expr(e.kids[0], dl::Value::of_smt(n->head), env) &&
                   match_expr(e.kids[1], dl::Value::of_list(n->tail), env);
        }
        }
        return false;
    }

    static bool match_atom(const dl::Atom& atom, const dl::Tuple& row, Env& env) {
        for (size_t i = 0; i < atom.args.size(); ++i)
            if (!match_expr(atom.args[i], row[i], env)) return false;
        return true;
    }

    const dl::Program& prog_;
    int bound_;
    std::vector<std::set<dl::Tuple, dl::TupleLess>> rows_;
};

/// Sorted tuple sets of an engine database, comparable with NaiveOracle::run.
inline std::vector<std::vector<dl::Tuple>> sorted_database(const dl::Database& db) {
    std::vector<std::vector<dl::Tuple>> out;
    for (size_t i = 0; i < db.relation_count(); ++i)
        out.push_back(db.rel(static_cast<uint32_t>(i)).sorted_rows());
    return out;
}

// ---------------------------------------------------------------------------
// Random SMT-free programs (range-restricted by construction).

inline std::string random_datalog_program(std::mt19937_64& rng) {
    auto draw = [&](uint64_t n) { return bench::bounded_uniform(rng, n); };
    uint32_t nrels = 2 + static_cast<uint32_t>(draw(3)); // 2..4
    std::vector<uint32_t> arity;
    std::string text;
    for (uint32_t r = 0; r < nrels; ++r) {
        arity.push_back(1 + static_cast<uint32_t>(draw(3))); // 1..3
        text += "rel r" + std::to_string(r) + "(";
        for (uint32_t i = 0; i < arity[r]; ++i) {
            if (i) text += ", ";
            text += "int";
        }
        text += ").\n";
    }
    static const char* vars[] = {"A", "B", "C", "D"};
    uint32_t nrules = 1 + static_cast<uint32_t>(draw(3)); // 1..3
    for (uint32_t i = 0; i < nrules; ++i) {
        uint32_t nbody = 1 + static_cast<uint32_t>(draw(3)); // 1..3
        std::vector<std::string> bound;
        std::string body;
        for (uint32_t b = 0; b < nbody; ++b) {
            uint32_t rel = static_cast<uint32_t>(draw(nrels));
            if (b) body += ", ";
            body += "r" + std::to_string(rel) + "(";
            for (uint32_t a = 0; a < arity[rel]; ++a) {
                if (a) body += ", ";
                if (draw(4) == 0) {
                    body += std::to_string(draw(5));
                } else {
                    const char* v = vars[draw(4)];
                    body += v;
                    bound.push_back(v);
                }
            }
            body += ")";
        }
        uint32_t head_rel = static_cast<uint32_t>(draw(nrels));
        std::string head = "r" + std::to_string(head_rel) + "(";
        for (uint32_t a = 0; a < arity[head_rel]; ++a) {
            if (a) head += ", ";
            if (bound.empty() || draw(5) == 0)
                head += std::to_string(draw(5));
            else
                head += bound[draw(bound.size())];
        }
        head += ")";
        text += head + " :- " + body + ".\n";
    }
    uint32_t nfacts = 3 + static_cast<uint32_t>(draw(28)); // 3..30
    for (uint32_t f = 0; f < nfacts; ++f) {
        uint32_t rel = static_cast<uint32_t>(draw(nrels));
        text += "r" + std::to_string(rel) + "(";
        for (uint32_t a = 0; a < arity[rel]; ++a) {
            if (a) text += ", ";
            text += std::to_string(draw(5));
        }
        text += ").\n";
    }
    return text;
}

// ---------------------------------------------------------------------------
// Random conjunct pools and query sequences over the reference fragment.

inline Conjunct random_conjunct(std::mt19937_64& rng) {
    auto draw = [&](uint64_t n) { return bench::bounded_uniform(rng, n); };
    switch (draw(3)) {
    case 0: { // boolean literal / 2-clause
        Term v = mk_var("q" + std::to_string(draw(3)), Sort::boolean());
        Term lit = draw(2) ? mk_not(v) : v;
        if (draw(2)) {
            Term w = mk_var("q" + std::to_string(draw(3)), Sort::boolean());
            Term lit2 = draw(2) ? mk_not(w) : w;
            if (lit != lit2) lit = mk_or({lit, lit2});
        }
        return canonicalize(lit);
    }
    case 1: { // linear integer comparison, |c| <= 4
        static const char* ops[] = {"<", "<=", ">", ">=", "="};
        Term v = mk_var("n" + std::to_string(draw(2)), Sort::integer());
        Term c = mk_int(static_cast<long long>(draw(9)) - 4);
        return canonicalize(mk_term(ops[draw(5)], {v, c}));
    }
    default: { // small bit-vector comparison (width 3 keeps enumeration cheap)
        static const char* ops[] = {"bvult", "bvule", "="};
        Term v = mk_var("m" + std::to_string(draw(2)), Sort::bitvec(3));
        Term c = mk_bv(BigInt(draw(8)), 3);
        return canonicalize(mk_term(ops[draw(3)], {v, c}));
    }
    }
}

/// A sequence of 1..8 queries over a shared pool, each 1..6 conjuncts.
inline std::vector<std::vector<Conjunct>> random_query_sequence(std::mt19937_64& rng) {
    auto draw = [&](uint64_t n) { return bench::bounded_uniform(rng, n); };
    std::vector<Conjunct> pool;
    uint64_t pool_size = 2 + draw(7);
    for (uint64_t i = 0; i < pool_size; ++i) pool.push_back(random_conjunct(rng));
    std::vector<std::vector<Conjunct>> queries;
    uint64_t nq = 1 + draw(8);
    for (uint64_t q = 0; q < nq; ++q) {
        std::vector<Conjunct> query;
        uint64_t len = 1 + draw(6);
        for (uint64_t i = 0; i < len; ++i) query.push_back(pool[draw(pool.size())]);
        queries.push_back(std::move(query));
    }
    return queries;
}

// ---------------------------------------------------------------------------
// Simple-path oracle for labeled graphs: exhaustive enumeration + reference
// feasibility filter. Returns the set of feasible vertex sequences.

inline std::set<std::vector<uint32_t>>
enumerate_feasible_paths(const std::vector<bench::LabeledEdge>& edges,
                         uint32_t max_nodes, uint32_t max_len,
                         int ref_bound = kDefaultReferenceBound) {
    std::map<uint32_t, std::vector<std::pair<uint32_t, Term>>> adj;
    for (const auto& e : edges) adj[e.src].emplace_back(e.dst, e.label);

    std::set<std::vector<uint32_t>> feasible;
    std::vector<uint32_t> path;   // vertices
    std::vector<Conjunct> labels; // one conjunct per edge
    auto explore = [&](auto&& self, uint32_t node) -> void {
        if (!labels.empty()) {
            // A superset of an unsat conjunct set stays unsat, so pruning
            // here loses no feasible extension.
            if (!reference_check(labels, ref_bound).is_sat()) return;
            feasible.insert(path);
        }
        if (labels.size() >= max_len) return;
        auto it = adj.find(node);
        if (it == adj.end()) return;
        for (const auto& [next, label] : it->second) {
            if (std::find(path.begin(), path.end(), next) != path.end()) continue;
            path.push_back(next);
            labels.push_back(canonicalize(label));
            self(self, next);
            labels.pop_back();
            path.pop_back();
        }
    };
    for (uint32_t n = 0; n < max_nodes; ++n) {
        path = {n};
        labels.clear();
        explore(explore, n);
    }
    return feasible;
}

/// Vertex sequences of all walk<k> tuples an engine run derived.
inline std::set<std::vector<uint32_t>>
database_walk_paths(const dl::Program& prog, const dl::Database& db) {
    std::set<std::vector<uint32_t>> out;
    for (uint32_t r = 0; r < prog.relations.size(); ++r) {
        const std::string& name = prog.relations[r].name;
        if (name.rfind("walk", 0) != 0) continue;
        for (const dl::Tuple& t : db.rel(r).sorted_rows()) {
            std::vector<uint32_t> path;
            for (const dl::Value& v : t)
                if (v.kind() == dl::Value::Kind::Int)
                    path.push_back(static_cast<uint32_t>(v.as_int()));
            out.insert(path);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Golden serialization corpus: (file name, command list) pairs. The files
// under tests/data/golden hold the exact expected bytes.

struct GoldenCase {
    std::string file;
    std::vector<Command> commands;
};

inline std::vector<GoldenCase> golden_cases() {
    const Sort B = Sort::boolean(), I = Sort::integer();
    Term v = mk_var("v", I);
    Term x1 = mk_var("x1", B);
    Term b = mk_var("b", Sort::bitvec(4));
    Term p = mk_var("p", B), q = mk_var("q", B);

    std::vector<GoldenCase> cases;

    cases.push_back(
        {"handshake.smt2",
         {Command::set_option("print-success", "false"),
          Command::set_option("produce-models", "true"),
          Command::set_logic("QF_LIA"), Command::declare_const("v", I),
          Command::push(1), Command::assert_term(mk_eq(v, mk_int(1))),
          Command::check_sat(), Command::get_model(), Command::pop(1),
          Command::exit_solver()}});

    cases.push_back(
        {"strategies.smt2",
         {Command::declare_const("v", I), Command::declare_const("x1", B),
          Command::declare_const("x3", B), Command::push(1),
          Command::assert_term(mk_implies(x1, mk_eq(v, mk_int(1)))),
          Command::pop(1), Command::push(2),
          Command::check_sat_assuming({"x1", "x3"}), Command::pop(2),
          Command::check_sat()}});

    cases.push_back(
        {"terms.smt2",
         {Command::declare_const("v", I), Command::declare_const("b", Sort::bitvec(4)),
          Command::declare_const("p", B), Command::declare_const("q", B),
          Command::declare_fun("f", {I, B}, I),
          Command::assert_term(mk_eq(v, mk_int(-3))),
          Command::assert_term(mk_eq(b, mk_bv(BigInt(5), 4))),
          Command::assert_term(mk_term("bvult", {b, mk_bv(BigInt(10), 4)})),
          Command::assert_term(
              mk_eq(mk_extract(3, 2, mk_term("concat", {b, b})), mk_bv(BigInt(1), 2))),
          Command::assert_term(mk_or({mk_and({p, mk_not(q)}), mk_implies(p, q)})),
          Command::assert_term(mk_eq(
              mk_ite(p, mk_term("+", {v, mk_int(1)}), mk_term("-", {v, mk_int(2)})),
              mk_uf("f", I, {v, q}))),
          Command::assert_term(mk_term("<=", {mk_term("*", {v, v}), mk_int(64)})),
          Command::assert_term(mk_term(">", {v, mk_int(0)})),
          Command::assert_term(mk_eq(mk_term("-", {v}), mk_int(-7))),
          Command::assert_term(
              mk_term("bvule", {mk_term("bvand", {b, mk_term("bvor", {b, b})}),
                                mk_term("bvadd", {b, mk_term("bvsub", {b, b})})}))}});

    return cases;
}

inline std::string render_golden(const GoldenCase& c) {
    std::string out;
    for (const Command& cmd : c.commands) out += serialize_command(cmd);
    return out;
}

} // namespace testsupport
