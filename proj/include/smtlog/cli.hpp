#pragma once

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "smtlog/bench/bench.hpp"
#include "smtlog/bench/csv.hpp"
#include "smtlog/datalog/eval.hpp"
#include "smtlog/datalog/parser.hpp"
#include "smtlog/solver.hpp"

namespace smtlog::cli {

// Exit codes: 0 success, 1 usage, 2 solver or environment failure,
// 3 soundness-check failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitEnvironment = 2;
inline constexpr int kExitSoundness = 3;

namespace detail {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw Error("failed writing '" + path + "'");
}

inline const std::map<std::string, Strategy>& strategy_values() {
    static const std::map<std::string, Strategy> m = {
        {"naive", Strategy::Naive}, {"pp", Strategy::PP}, {"csa", Strategy::CSA}};
    return m;
}

inline const std::map<std::string, dl::IssueOrder>& order_values() {
    static const std::map<std::string, dl::IssueOrder> m = {
        {"dfs", dl::IssueOrder::Dfs}, {"bfs", dl::IssueOrder::Bfs}};
    return m;
}

inline const std::map<std::string, bench::LabelLogic>& logic_values() {
    static const std::map<std::string, bench::LabelLogic> m = {
        {"bool", bench::LabelLogic::Bool},
        {"lia", bench::LabelLogic::Lia},
        {"bv8", bench::LabelLogic::Bv8}};
    return m;
}

inline const std::map<std::string, dl::UnknownPolicy>& unknown_values() {
    static const std::map<std::string, dl::UnknownPolicy> m = {
        {"false", dl::UnknownPolicy::TreatFalse},
        {"true", dl::UnknownPolicy::TreatTrue},
        {"error", dl::UnknownPolicy::Error}};
    return m;
}

struct RunArgs {
    std::string program_path;
    Strategy strategy = Strategy::Naive;
    dl::IssueOrder order = dl::IssueOrder::Dfs;
    bool reference_backend = false;
    int reference_bound = kDefaultReferenceBound;
    std::string solver_cmd;
    std::string logic = "ALL";
    uint32_t timeout_ms = 0;
    uint32_t workers = 1;
    dl::UnknownPolicy unknown = dl::UnknownPolicy::TreatFalse;
    bool no_cache = false;
    uint32_t max_path_len = 0; // 0 = unlimited
    uint64_t tuple_budget = 10'000'000;
    std::vector<std::string> print_relations;
    bool print_all = false;
};

inline std::unique_ptr<Session> make_session(bool reference, int ref_bound,
                                             const std::string& solver_cmd,
                                             const std::string& logic,
                                             uint32_t timeout_ms, Strategy strategy) {
    if (reference) return open_reference_session(strategy, ref_bound);
    SolverConfig config;
    config.command = split_command(solver_cmd);
    config.logic = logic;
    config.timeout_ms = timeout_ms;
    return open_session(std::move(config), strategy); // SMTLOG_SOLVER may override
}

inline int do_run(const RunArgs& args) {
    dl::Program prog = dl::parse_program(read_file(args.program_path));

    std::vector<std::unique_ptr<Session>> sessions;
    std::vector<Session*> pool;
    for (uint32_t i = 0; i < args.workers; ++i) {
        sessions.push_back(make_session(args.reference_backend, args.reference_bound,
                                        args.solver_cmd, args.logic, args.timeout_ms,
                                        args.strategy));
        pool.push_back(sessions.back().get());
    }

    dl::EvalConfig config;
    config.order = args.order;
    config.worker_count = args.workers;
    config.unknown_policy = args.unknown;
    config.tuple_budget = args.tuple_budget;
    if (args.max_path_len > 0) config.max_path_len = args.max_path_len;

    dl::QueryCache cache;
    dl::EvalResult result =
        dl::evaluate(prog, pool, config, args.no_cache ? nullptr : &cache);

    Metrics total;
    for (auto& s : sessions) total += s->close();

    for (uint32_t r = 0; r < prog.relations.size(); ++r) {
        const auto& decl = prog.relations[r];
        std::cout << "% " << decl.name << ": " << result.db->rel(r).size()
                  << " tuple(s)\n";
        bool dump = args.print_all;
        for (const std::string& name : args.print_relations)
            dump = dump || name == decl.name;
        if (dump)
            for (const dl::Tuple& t : result.db->rel(r).sorted_rows())
                std::cout << dl::tuple_to_string(decl.name, t) << "\n";
    }
    std::cout << "% solver: strategy=" << strategy_name(args.strategy)
              << " order=" << dl::order_name(args.order) << " checks=" << total.checks
              << " asserts=" << total.asserts << " pushes=" << total.pushes
              << " pops=" << total.pops << " sat=" << total.sat
              << " unsat=" << total.unsat << " unknown=" << total.unknown
              << " cache_hits=" << result.stats.cache_hits << "\n";
    return kExitOk;
}

struct BenchArgs {
    std::vector<uint64_t> seeds{1};
    bench::GraphSpec spec;
    std::vector<Strategy> strategies;
    std::vector<dl::IssueOrder> orders;
    bool reference_backend = false;
    int reference_bound = kDefaultReferenceBound;
    std::string solver_cmd;
    std::string logic = "ALL";
    uint32_t timeout_ms = 0;
    uint32_t max_path_len = 8;
    bool no_cache = false;
    bool parallel_cells = false;
    std::string csv_path;
};

inline int do_bench(const BenchArgs& args) {
    bench::BenchOptions opts;
    opts.spec = args.spec;
    if (!args.strategies.empty()) opts.strategies = args.strategies;
    if (!args.orders.empty()) opts.orders = args.orders;
    opts.reference_backend = args.reference_backend;
    opts.reference_bound = args.reference_bound;
    if (!args.reference_backend) {
        opts.solver.command = split_command(args.solver_cmd);
        opts.solver.logic = args.logic;
        opts.solver.timeout_ms = args.timeout_ms;
        if (opts.solver.command.empty() && !std::getenv("SMTLOG_SOLVER"))
            throw SpawnError(
                "no solver configured; pass --solver-cmd or --reference-backend");
    }
    opts.max_path_len = args.max_path_len;
    opts.cache_enabled = !args.no_cache;
    opts.parallel_cells = args.parallel_cells;

    std::vector<bench::RunRow> rows;
    for (uint64_t seed : args.seeds) {
        opts.spec.seed = seed;
        std::vector<bench::RunRow> batch = bench::run_benchmark(opts);
        rows.insert(rows.end(), batch.begin(), batch.end());
    }

    std::cout << bench::render_csv(rows);
    for (const bench::RunRow& r : rows)
        if (r.error)
            std::cerr << "error: cell (" << r.graph_id << ", "
                      << strategy_name(r.strategy) << ", " << dl::order_name(r.order)
                      << "): " << r.error_text << "\n";
    if (!args.csv_path.empty()) bench::emit_csv(rows, args.csv_path);
    for (const bench::RunRow& r : rows)
        if (r.error) return kExitEnvironment;
    return kExitOk;
}

struct GenArgs {
    bench::GraphSpec spec;
    uint32_t max_path_len = 8;
    bool facts_only = false;
    std::string output;
};

inline int do_gen(const GenArgs& args) {
    std::string text;
    if (args.facts_only) {
        text = "rel edge(int, int, smt_bool).\n" +
               bench::render_graph_facts(bench::gen_graph(args.spec));
    } else {
        text = bench::render_benchmark_program(args.spec, args.max_path_len);
    }
    write_output(args.output, text);
    return kExitOk;
}

} // namespace detail

inline int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Datalog with embedded SMT terms over incremental solver strategies"};
    app.require_subcommand(1);

    detail::GenArgs gen_args;
    CLI::App* gen = app.add_subcommand("gen", "Generate a labeled random graph program");
    gen->add_option("--seed", gen_args.spec.seed, "generator seed");
    gen->add_option("--nodes", gen_args.spec.nodes, "node count")
        ->check(CLI::PositiveNumber);
    gen->add_option("--avg-out-degree", gen_args.spec.avg_out_degree,
                    "average out-degree");
    gen->add_option("--label-logic", gen_args.spec.label_logic, "label family")
        ->transform(CLI::CheckedTransformer(detail::logic_values()));
    gen->add_option("--label-vars", gen_args.spec.label_vars,
                    "shared variable pool size");
    gen->add_option("--max-path-len", gen_args.max_path_len,
                    "path length bound in the emitted rules");
    gen->add_flag("--facts-only", gen_args.facts_only,
                  "emit only the edge declaration and facts");
    gen->add_option("-o,--output", gen_args.output, "output file (default stdout)");

    detail::RunArgs run_args;
    CLI::App* run = app.add_subcommand("run", "Evaluate a program file");
    run->add_option("program", run_args.program_path, "program file")->required();
    run->add_option("--strategy", run_args.strategy, "solver strategy")
        ->transform(CLI::CheckedTransformer(detail::strategy_values()));
    run->add_option("--order", run_args.order, "query issuance order")
        ->transform(CLI::CheckedTransformer(detail::order_values()));
    run->add_flag("--reference-backend", run_args.reference_backend,
                  "use the in-process brute-force backend");
    run->add_option("--reference-bound", run_args.reference_bound,
                    "Int search bound for the reference backend");
    run->add_option("--solver-cmd", run_args.solver_cmd,
                    "solver command line, e.g. 'z3 -in'");
    run->add_option("--logic", run_args.logic, "SMT-LIB logic for set-logic");
    run->add_option("--timeout-ms", run_args.timeout_ms, "per-check timeout");
    run->add_option("--workers", run_args.workers, "parallel workers (1 = sequential)")
        ->check(CLI::PositiveNumber);
    run->add_option("--unknown", run_args.unknown, "unknown-verdict policy")
        ->transform(CLI::CheckedTransformer(detail::unknown_values()));
    run->add_flag("--no-cache", run_args.no_cache, "disable the query cache");
    run->add_option("--max-path-len", run_args.max_path_len,
                    "skip is_sat queries longer than this (0 = unlimited)");
    run->add_option("--tuple-budget", run_args.tuple_budget,
                    "abort after deriving this many tuples");
    run->add_option("--print", run_args.print_relations, "dump a relation's tuples");
    run->add_flag("--print-all", run_args.print_all, "dump every relation");

    detail::BenchArgs bench_args;
    CLI::App* bench_cmd =
        app.add_subcommand("bench", "Run the reachability benchmark matrix");
    bench_cmd->add_option("--seed", bench_args.seeds, "graph seed (repeatable)");
    bench_cmd->add_option("--nodes", bench_args.spec.nodes, "node count")
        ->check(CLI::PositiveNumber);
    bench_cmd->add_option("--avg-out-degree", bench_args.spec.avg_out_degree,
                          "average out-degree");
    bench_cmd->add_option("--label-logic", bench_args.spec.label_logic, "label family")
        ->transform(CLI::CheckedTransformer(detail::logic_values()));
    bench_cmd->add_option("--label-vars", bench_args.spec.label_vars,
                          "shared variable pool size");
    bench_cmd
        ->add_option("--strategy", bench_args.strategies,
                     "strategy to run (repeatable; default all)")
        ->transform(CLI::CheckedTransformer(detail::strategy_values()));
    bench_cmd
        ->add_option("--order", bench_args.orders,
                     "issuance order to run (repeatable; default both)")
        ->transform(CLI::CheckedTransformer(detail::order_values()));
    bench_cmd->add_flag("--reference-backend", bench_args.reference_backend,
                        "use the in-process brute-force backend");
    bench_cmd->add_option("--reference-bound", bench_args.reference_bound,
                          "Int search bound for the reference backend");
    bench_cmd->add_option("--solver-cmd", bench_args.solver_cmd, "solver command line");
    bench_cmd->add_option("--logic", bench_args.logic, "SMT-LIB logic");
    bench_cmd->add_option("--timeout-ms", bench_args.timeout_ms, "per-check timeout");
    bench_cmd->add_option("--max-path-len", bench_args.max_path_len,
                          "simple-path length bound");
    bench_cmd->add_flag("--no-cache", bench_args.no_cache, "disable the query cache");
    bench_cmd->add_flag("--parallel-cells", bench_args.parallel_cells,
                        "run benchmark cells concurrently");
    bench_cmd->add_option("--csv", bench_args.csv_path, "write rows to a CSV file");

    try {
        app.parse(argc, const_cast<char**>(argv));
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (gen->parsed()) return detail::do_gen(gen_args);
        if (run->parsed()) return detail::do_run(run_args);
        if (bench_cmd->parsed()) return detail::do_bench(bench_args);
        return kExitUsage;
    } catch (const SoundnessError& e) {
        std::cerr << "soundness failure: " << e.what() << "\n";
        return kExitSoundness;
    } catch (const SpawnError& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return kExitEnvironment;
    } catch (const HandshakeError& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return kExitEnvironment;
    } catch (const SolverCrash& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return kExitEnvironment;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitEnvironment;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitEnvironment;
    }
}

} // namespace smtlog::cli
