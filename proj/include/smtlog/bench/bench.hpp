#pragma once

#include <chrono>
#include <future>
#include <memory>
#include <string>
#include <vector>

#include "smtlog/bench/graphgen.hpp"
#include "smtlog/datalog/eval.hpp"
#include "smtlog/datalog/parser.hpp"
#include "smtlog/solver.hpp"

namespace smtlog::bench {

/// The labeled-reachability program: simple paths are encoded with one
/// walk<k> relation per length k, whose columns spell out the visited
/// vertices; disequalities keep the new endpoint off the visited set, and
/// is_sat gates every extension on the feasibility of the label conjunction.
inline std::string reachability_program_text(uint32_t max_len) {
    if (max_len < 1) throw SpecError("max_path_len must be >= 1");
    std::string out;
    out += "% labeled-graph reachability over simple paths (max length " +
           std::to_string(max_len) + ")\n";
    out += "rel edge(int, int, smt_bool).\n";
    for (uint32_t k = 1; k <= max_len; ++k) {
        out += "rel walk" + std::to_string(k) + "(";
        for (uint32_t i = 0; i <= k; ++i) out += "int, ";
        out += "smt_list).\n";
    }
    out += "rel path(int, int, smt_list).\n";
    out += "walk1(V0, V1, cons(F, nil)) :- edge(V0, V1, F), is_sat(cons(F, nil)).\n";
    for (uint32_t k = 2; k <= max_len; ++k) {
        auto vars = [&](uint32_t upto) {
            std::string s;
            for (uint32_t i = 0; i <= upto; ++i) {
                if (i) s += ", ";
                s += "V" + std::to_string(i);
            }
            return s;
        };
        std::string vk = "V" + std::to_string(k);
        out += "walk" + std::to_string(k) + "(" + vars(k) + ", cons(F, Fs)) :- walk" +
               std::to_string(k - 1) + "(" + vars(k - 1) + ", Fs), edge(V" +
               std::to_string(k - 1) + ", " + vk + ", F)";
        for (uint32_t i = 0; i + 1 < k; ++i)
            out += ", " + vk + " != V" + std::to_string(i);
        out += ", is_sat(cons(F, Fs)).\n";
    }
    for (uint32_t k = 1; k <= max_len; ++k) {
        out += "path(V0, V" + std::to_string(k) + ", Fs) :- walk" + std::to_string(k) +
               "(";
        for (uint32_t i = 0; i <= k; ++i) out += "V" + std::to_string(i) + ", ";
        out += "Fs).\n";
    }
    return out;
}

/// Full runnable benchmark program: rules plus generated edge facts.
inline std::string render_benchmark_program(const GraphSpec& spec, uint32_t max_len) {
    return reachability_program_text(max_len) + render_graph_facts(gen_graph(spec));
}

struct RunRow {
    std::string graph_id;
    Strategy strategy = Strategy::Naive;
    dl::IssueOrder order = dl::IssueOrder::Dfs;
    uint64_t checks = 0, asserts = 0, pushes = 0, pops = 0;
    uint64_t cache_hits = 0;
    uint64_t sat = 0, unsat = 0, unknown = 0;
    uint64_t solver_wall_ns = 0, total_wall_ns = 0;
    double mean_common_prefix = 0.0;
    bool error = false;
    std::string error_text;
};

struct BenchOptions {
    GraphSpec spec;
    std::vector<Strategy> strategies{Strategy::Naive, Strategy::PP, Strategy::CSA};
    std::vector<dl::IssueOrder> orders{dl::IssueOrder::Dfs, dl::IssueOrder::Bfs};
    bool reference_backend = true;
    int reference_bound = kDefaultReferenceBound;
    SolverConfig solver;       // used when reference_backend is false
    uint32_t max_path_len = 8;
    bool cache_enabled = true;
    bool parallel_cells = false;
};

namespace detail {

struct CellOutcome {
    RunRow row;
    std::unique_ptr<dl::Database> db;
};

inline CellOutcome run_cell(const dl::Program& prog, const BenchOptions& opts,
                            Strategy strategy, dl::IssueOrder order) {
    CellOutcome out;
    out.row.graph_id = opts.spec.id();
    out.row.strategy = strategy;
    out.row.order = order;
    auto t0 = std::chrono::steady_clock::now();
    try {
        std::unique_ptr<Session> session =
            opts.reference_backend
                ? open_reference_session(strategy, opts.reference_bound)
                : open_session(opts.solver, strategy);
        Session* pool[] = {session.get()};
        dl::EvalConfig config;
        config.order = order;
        dl::QueryCache cache;
        dl::EvalResult result = dl::evaluate(prog, pool, config,
                                             opts.cache_enabled ? &cache : nullptr);
        Metrics m = session->close();
        out.row.checks = m.checks;
        out.row.asserts = m.asserts;
        out.row.pushes = m.pushes;
        out.row.pops = m.pops;
        out.row.cache_hits = result.stats.cache_hits;
        out.row.sat = m.sat;
        out.row.unsat = m.unsat;
        out.row.unknown = m.unknown;
        out.row.solver_wall_ns = m.solver_wall_ns;
        out.row.mean_common_prefix = m.mean_common_prefix();
        out.db = std::move(result.db);
    } catch (const SolverCrash& e) {
        out.row.error = true;
        out.row.error_text = e.what();
    }
    out.row.total_wall_ns = static_cast<uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(
            std::chrono::steady_clock::now() - t0)
            .count());
    return out;
}

} // namespace detail

/// Runs the reachability benchmark for every (strategy, order) cell on a
/// fresh session and cache, and asserts that all cells derived the same
/// feasible-path set before returning the rows. A mismatch is a soundness
/// bug and throws SoundnessError. Unrecoverable solver crashes abort the
/// cell and record an error row.
inline std::vector<RunRow> run_benchmark(const BenchOptions& opts) {
    dl::Program prog =
        dl::parse_program(render_benchmark_program(opts.spec, opts.max_path_len));

    std::vector<std::pair<Strategy, dl::IssueOrder>> cells;
    for (Strategy s : opts.strategies)
        for (dl::IssueOrder o : opts.orders) cells.emplace_back(s, o);

    std::vector<detail::CellOutcome> outcomes(cells.size());
    if (opts.parallel_cells) {
        std::vector<std::future<detail::CellOutcome>> futures;
        for (auto& [s, o] : cells)
            futures.push_back(std::async(std::launch::async, [&, s, o] {
                return detail::run_cell(prog, opts, s, o);
            }));
        for (size_t i = 0; i < futures.size(); ++i) outcomes[i] = futures[i].get();
    } else {
        for (size_t i = 0; i < cells.size(); ++i)
            outcomes[i] = detail::run_cell(prog, opts, cells[i].first, cells[i].second);
    }

    const dl::Database* baseline = nullptr;
    for (const auto& o : outcomes) {
        if (o.row.error) continue;
        if (!baseline) {
            baseline = o.db.get();
        } else if (!baseline->equal_sets(*o.db)) {
            throw SoundnessError(
                "feasible-path sets differ across benchmark cells (strategy " +
                std::string(strategy_name(o.row.strategy)) + ", order " +
                dl::order_name(o.row.order) + ")");
        }
    }

    std::vector<RunRow> rows;
    rows.reserve(outcomes.size());
    for (auto& o : outcomes) rows.push_back(std::move(o.row));
    return rows;
}

} // namespace smtlog::bench
