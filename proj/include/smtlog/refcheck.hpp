#pragma once

#include <span>
#include <vector>

#include "smtlog/canonical.hpp"
#include "smtlog/eval.hpp"
#include "smtlog/smtlib.hpp"

namespace smtlog {

namespace detail {

struct RefVar {
    Term var;
    std::vector<ConstValue> domain;
};

// Conjuncts grouped by the deepest variable they mention, so each one is
// evaluated as soon as it becomes ground and prunes the enumeration early.
// This is still exhaustive search: no theory reasoning, only evaluation.
struct RefSearch {
    std::vector<RefVar> vars;
    std::vector<std::vector<Term>> ready_at; // index = var depth; [0] = ground terms
    Assignment assignment;

    bool run(size_t depth) {
        for (Term t : ready_at[depth])
            if (!eval_bool(t, assignment)) return false;
        if (depth == vars.size()) return true;
        for (const ConstValue& v : vars[depth].domain) {
            assignment[vars[depth].var] = v;
            if (run(depth + 1)) return true;
        }
        assignment.erase(vars[depth].var);
        return false;
    }
};

inline void check_ref_fragment(Term t) {
    if (t.is_app() && t.op() == Op::Uf)
        throw UnsupportedFragment(
            "reference backend cannot decide uninterpreted function '" +
            t.symbol() + "'");
    if (t.is_var() && t.sort().is_uninterpreted())
        throw UnsupportedFragment(
            "reference backend cannot enumerate uninterpreted sort " +
            t.sort().smtlib());
    if (t.is_var() && t.sort().is_bitvec() && t.sort().bv_width() > 8)
        throw UnsupportedFragment(
            "reference backend is limited to bit-vector variables of width <= 8");
    if (t.is_app())
        for (size_t i = 0; i < t.arity(); ++i) check_ref_fragment(t.arg(i));
}

} // namespace detail

/// Default Int search interval half-width for the reference backend.
inline constexpr int kDefaultReferenceBound = 8;

/// Brute-force satisfiability decision over the bounded fragment: Bool
/// variables range over {false,true}, Int variables over
/// [-domain_bound, +domain_bound], bit-vector variables (width <= 8) over
/// their full range. Sat iff some assignment satisfies every conjunct; never
/// Unknown. Returns the witness when Sat.
///
/// Caveat: the Int search is bounded, so a Sat answer is always sound while
/// an Unsat answer is sound only relative to domain_bound. Callers (test
/// generators, the label generator) must keep satisfying witnesses within
/// the bound by construction.
inline std::optional<Assignment> reference_witness(std::span<const Conjunct> query,
                                                   int domain_bound = kDefaultReferenceBound) {
    std::vector<Term> terms;
    terms.reserve(query.size());
    for (const Conjunct& c : query) {
        detail::check_ref_fragment(c.term());
        terms.push_back(c.term());
    }
    SymbolSet syms = collect_symbols(terms);

    detail::RefSearch search;
    BigInt space = 1;
    for (Term v : syms.vars) {
        detail::RefVar rv{v, {}};
        if (v.sort().is_bool()) {
            rv.domain = {ConstValue(false), ConstValue(true)};
        } else if (v.sort().is_int()) {
            for (int i = -domain_bound; i <= domain_bound; ++i)
                rv.domain.push_back(ConstValue(BigInt(i)));
        } else { // BitVec, width <= 8 checked above
            uint32_t w = v.sort().bv_width();
            for (uint64_t b = 0; b < (1ull << w); ++b)
                rv.domain.push_back(ConstValue(BvValue{w, BigInt(b)}));
        }
        space *= rv.domain.size();
        search.vars.push_back(std::move(rv));
    }
    if (space > 50'000'000)
        throw UnsupportedFragment("reference backend search space too large (" +
                                  space.str() + " assignments)");

    // Map each conjunct to the depth at which all its variables are assigned.
    auto var_depth = [&](Term v) {
        for (size_t i = 0; i < search.vars.size(); ++i)
            if (search.vars[i].var == v) return i + 1;
        return size_t{0};
    };
    search.ready_at.resize(search.vars.size() + 1);
    for (Term t : terms) {
        size_t depth = 0;
        for (Term v : free_vars(t)) depth = std::max(depth, var_depth(v));
        search.ready_at[depth].push_back(t);
    }

    if (search.run(0)) {
        // Complete the witness for variables left unassigned (none currently,
        // since run() assigns depth-first, but keep the witness total).
        for (const auto& rv : search.vars)
            if (!search.assignment.count(rv.var))
                search.assignment[rv.var] = rv.domain.front();
        return search.assignment;
    }
    return std::nullopt;
}

inline SatResult reference_check(std::span<const Conjunct> query,
                                 int domain_bound = kDefaultReferenceBound) {
    return reference_witness(query, domain_bound) ? SatResult::sat()
                                                  : SatResult::unsat();
}

/// Renders a witness assignment as a Model (bindings sorted by name).
inline Model model_from_witness(const Assignment& witness) {
    std::vector<Term> vars;
    vars.reserve(witness.size());
    for (const auto& [v, _] : witness) vars.push_back(v);
    std::sort(vars.begin(), vars.end(),
              [](Term a, Term b) { return a.symbol() < b.symbol(); });
    Model m;
    for (Term v : vars)
        m.bindings.push_back(ModelBinding{v.symbol(), v.sort(), witness.at(v)});
    return m;
}

} // namespace smtlog
