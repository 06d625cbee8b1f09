#pragma once

#include <cmath>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "smtlog/canonical.hpp"
#include "smtlog/errors.hpp"
#include "smtlog/smtlib.hpp"

namespace smtlog::bench {

enum class LabelLogic { Bool, Lia, Bv8 };

inline const char* label_logic_name(LabelLogic l) {
    switch (l) {
    case LabelLogic::Bool: return "bool";
    case LabelLogic::Lia: return "lia";
    case LabelLogic::Bv8: return "bv8";
    }
    return "?";
}

struct GraphSpec {
    uint64_t seed = 1;
    uint32_t nodes = 50;
    double avg_out_degree = 3.0;
    LabelLogic label_logic = LabelLogic::Lia;
    uint32_t label_vars = 4;

    std::string id() const {
        std::string d = std::to_string(avg_out_degree);
        d.erase(d.find_last_not_of('0') + 1);
        if (!d.empty() && d.back() == '.') d.pop_back();
        return "s" + std::to_string(seed) + "-n" + std::to_string(nodes) + "-d" + d +
               "-" + label_logic_name(label_logic) + "-v" + std::to_string(label_vars);
    }
};

struct LabeledEdge {
    uint32_t src = 0, dst = 0;
    Term label; // Bool-sorted
};

/// Unbiased draw from [0, n) using rejection sampling over raw mt19937_64
/// output. std::uniform_int_distribution is implementation-defined; this is
/// identical on every platform, which the golden graph files rely on.
inline uint64_t bounded_uniform(std::mt19937_64& rng, uint64_t n) {
    if (n == 0) throw SpecError("bounded_uniform with empty range");
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    while (true) {
        uint64_t x = rng();
        if (x < limit) return x % n;
    }
}

namespace detail {

inline Term bool_literal(std::mt19937_64& rng, uint32_t vars) {
    Term v = mk_var("p" + std::to_string(bounded_uniform(rng, vars)), Sort::boolean());
    return bounded_uniform(rng, 2) == 0 ? v : mk_not(v);
}

inline Term gen_label(std::mt19937_64& rng, LabelLogic logic, uint32_t vars) {
    switch (logic) {
    case LabelLogic::Bool: {
        // literal or a 2-clause
        if (bounded_uniform(rng, 3) < 2) return bool_literal(rng, vars);
        Term a = bool_literal(rng, vars);
        Term b = bool_literal(rng, vars);
        if (a == b) return a; // `or` wants distinct args often enough; keep simple
        return mk_or({a, b});
    }
    case LabelLogic::Lia: {
        // (op v_i c) with |c| <= 4, so any satisfiable conjunction has a
        // witness within the reference backend's default bound of 8.
        static const char* ops[] = {"<", "<=", ">", ">=", "="};
        const char* op = ops[bounded_uniform(rng, 5)];
        Term v = mk_var("v" + std::to_string(bounded_uniform(rng, vars)),
                        Sort::integer());
        Term c = mk_int(static_cast<long long>(bounded_uniform(rng, 9)) - 4);
        return mk_term(op, {v, c});
    }
    case LabelLogic::Bv8: {
        static const char* ops[] = {"bvult", "bvule", "="};
        const char* op = ops[bounded_uniform(rng, 3)];
        Term v = mk_var("b" + std::to_string(bounded_uniform(rng, vars)),
                        Sort::bitvec(8));
        Term c = mk_bv(BigInt(bounded_uniform(rng, 256)), 8);
        return bounded_uniform(rng, 2) == 0 ? mk_term(op, {v, c})
                                            : mk_term(op, {c, v});
    }
    }
    throw SpecError("unknown label logic");
}

} // namespace detail

/// Deterministic labeled-graph generator ("floyd-mt19937_64-v1"): edge count
/// is round(nodes * avg_out_degree), sampled without replacement from the
/// nodes*(nodes-1) non-self-loop ordered pairs with Floyd's algorithm over a
/// seeded mt19937_64, then sorted; labels are drawn from the logic's template
/// family in sorted-edge order. Identical specs produce identical graphs.
inline std::vector<LabeledEdge> gen_graph(const GraphSpec& spec) {
    if (spec.nodes < 2) throw SpecError("graph needs at least 2 nodes");
    if (spec.label_vars < 1) throw SpecError("label_vars must be >= 1");
    uint64_t pairs = static_cast<uint64_t>(spec.nodes) * (spec.nodes - 1);
    uint64_t edges = static_cast<uint64_t>(
        std::llround(static_cast<double>(spec.nodes) * spec.avg_out_degree));
    if (edges > pairs)
        throw SpecError("requested " + std::to_string(edges) + " edges but only " +
                        std::to_string(pairs) + " node pairs exist");

    std::mt19937_64 rng(spec.seed);
    std::unordered_set<uint64_t> chosen;
    for (uint64_t j = pairs - edges; j < pairs; ++j) {
        uint64_t t = bounded_uniform(rng, j + 1);
        if (!chosen.insert(t).second) chosen.insert(j);
    }
    std::vector<uint64_t> sorted(chosen.begin(), chosen.end());
    std::sort(sorted.begin(), sorted.end());

    std::vector<LabeledEdge> out;
    out.reserve(sorted.size());
    for (uint64_t e : sorted) {
        uint32_t src = static_cast<uint32_t>(e / (spec.nodes - 1));
        uint32_t r = static_cast<uint32_t>(e % (spec.nodes - 1));
        uint32_t dst = r + (r >= src ? 1 : 0);
        out.push_back(LabeledEdge{
            src, dst, detail::gen_label(rng, spec.label_logic, spec.label_vars)});
    }
    return out;
}

/// Edge facts in the surface syntax, one per line.
inline std::string render_graph_facts(const std::vector<LabeledEdge>& edges) {
    std::string out;
    for (const LabeledEdge& e : edges)
        out += "edge(" + std::to_string(e.src) + ", " + std::to_string(e.dst) +
               ", #smt{" + serialize_term(e.label) + "}).\n";
    return out;
}

} // namespace smtlog::bench
