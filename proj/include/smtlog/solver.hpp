#pragma once

#include <chrono>
#include <cstdlib>
#include <functional>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "smtlog/backend.hpp"
#include "smtlog/canonical.hpp"
#include "smtlog/smtlib.hpp"

namespace smtlog {

enum class Strategy { Naive, PP, CSA };

inline const char* strategy_name(Strategy s) {
    switch (s) {
    case Strategy::Naive: return "naive";
    case Strategy::PP: return "pp";
    case Strategy::CSA: return "csa";
    }
    return "?";
}

struct SolverConfig {
    std::vector<std::string> command; // executable + arguments
    std::string logic = "ALL";
    uint32_t timeout_ms = 0; // per check; 0 = none
    bool restart_on_crash = true;
    std::string stderr_log; // empty = /dev/null

    // How long to listen for an (error ...) response after the handshake.
    uint32_t handshake_probe_ms = 40;

    // Whether to emit (set-option :timeout ms). Auto emits it only for
    // binaries that look like Z3; the read deadline watchdog guards every
    // solver regardless.
    enum class TimeoutOption { Auto, Always, Never };
    TimeoutOption timeout_option = TimeoutOption::Auto;
};

/// Fresh boolean variable guarding one conjunct under CSA. Names use the
/// reserved `__csa_<k>` prefix so they can never collide with user symbols.
struct AssumptionVar {
    std::string name;
    uint64_t index = 0;
};

inline AssumptionVar make_assumption_var(uint64_t k) {
    return {std::string(kAssumptionPrefix) + std::to_string(k), k};
}

struct Metrics {
    uint64_t checks = 0;
    uint64_t asserts = 0; // first-time assert commands (crash replays excluded)
    uint64_t pushes = 0;  // frames pushed
    uint64_t pops = 0;    // frames popped
    uint64_t sat = 0, unsat = 0, unknown = 0;
    uint64_t prefix_len_sum = 0; // sum over checks of |common prefix with previous query|
    uint64_t restarts = 0;
    uint64_t replayed_asserts = 0; // re-sent while rebuilding state after a crash
    uint64_t solver_wall_ns = 0;
    uint64_t total_wall_ns = 0;

    double mean_common_prefix() const {
        return checks ? static_cast<double>(prefix_len_sum) / static_cast<double>(checks)
                      : 0.0;
    }

    Metrics& operator+=(const Metrics& o) {
        checks += o.checks; asserts += o.asserts; pushes += o.pushes; pops += o.pops;
        sat += o.sat; unsat += o.unsat; unknown += o.unknown;
        prefix_len_sum += o.prefix_len_sum; restarts += o.restarts;
        replayed_asserts += o.replayed_asserts;
        solver_wall_ns += o.solver_wall_ns; total_wall_ns += o.total_wall_ns;
        return *this;
    }
};

// ---------------------------------------------------------------------------
// Strategy planning (pure functions)

inline size_t common_prefix_len(std::span<const Conjunct> a,
                                std::span<const Conjunct> b) {
    size_t n = std::min(a.size(), b.size()), i = 0;
    while (i < n && a[i] == b[i]) ++i;
    return i;
}

/// PP alignment: pop frames until the assertion stack is a prefix of the
/// query, then push the remaining query conjuncts.
struct AlignmentPlan {
    size_t pops = 0;
    std::vector<Conjunct> pushes;
};

inline AlignmentPlan plan_pp(std::span<const Conjunct> pp_stack,
                             std::span<const Conjunct> query) {
    size_t common = common_prefix_len(pp_stack, query);
    AlignmentPlan plan;
    plan.pops = pp_stack.size() - common;
    plan.pushes.assign(query.begin() + common, query.end());
    return plan;
}

using CsaMap = std::unordered_map<Conjunct, AssumptionVar, ConjunctHash>;

/// CSA planning: mint a fresh assumption variable for each query conjunct
/// absent from the map, and list every query conjunct's variable in query
/// order. Pure over (map, counter).
struct CsaPlan {
    std::vector<std::pair<AssumptionVar, Conjunct>> new_assertions;
    std::vector<AssumptionVar> assumptions;
};

inline CsaPlan plan_csa(const CsaMap& map, uint64_t next_index,
                        std::span<const Conjunct> query) {
    CsaPlan plan;
    CsaMap local;
    for (const Conjunct& c : query) {
        auto it = map.find(c);
        if (it != map.end()) {
            plan.assumptions.push_back(it->second);
            continue;
        }
        auto lit = local.find(c);
        if (lit != local.end()) {
            plan.assumptions.push_back(lit->second);
            continue;
        }
        AssumptionVar v = make_assumption_var(next_index++);
        local.emplace(c, v);
        plan.new_assertions.emplace_back(v, c);
        plan.assumptions.push_back(v);
    }
    return plan;
}

// ---------------------------------------------------------------------------
// Session

/// One live solver connection plus per-strategy state. Exclusive-use: at most
/// one in-flight operation; parallel callers hold one Session per worker.
class Session {
public:
    using BackendFactory = std::function<std::unique_ptr<SolverBackend>()>;

    Session(SolverConfig config, Strategy strategy, BackendFactory factory)
        : config_(std::move(config)), strategy_(strategy),
          factory_(std::move(factory)), backend_(factory_()),
          opened_at_(std::chrono::steady_clock::now()) {
        handshake();
    }

    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;
    ~Session() {
        try {
            close();
        } catch (...) {
        }
    }

    Strategy strategy() const { return strategy_; }
    const Metrics& metrics() const { return metrics_; }
    std::span<const Conjunct> pp_stack() const { return pp_stack_; }
    size_t csa_distinct() const { return csa_map_.size(); }

    /// Dispatches the query to the configured strategy and returns the solver
    /// verdict. Declarations are emitted before first use of any symbol. On a
    /// crash the query is retried once after a restart (when configured); on
    /// a timeout the process is killed and the verdict is Unknown("timeout").
    SatResult check(std::span<const Conjunct> query) {
        return checked_run(query, nullptr);
    }

    /// check(), then get-model under the same assertion context when Sat
    /// (for NAIVE, before the bracketing pop).
    std::optional<Model> get_model(std::span<const Conjunct> query) {
        Model m;
        SatResult r = checked_run(query, &m);
        if (!r.is_sat()) return std::nullopt;
        return m;
    }

    /// Sends Exit, reaps the process, and returns the final metrics.
    Metrics close() {
        if (!closed_) {
            closed_ = true;
            metrics_.total_wall_ns = elapsed_ns(opened_at_);
            try {
                backend_->submit(Command::exit_solver());
            } catch (...) {
            }
            backend_->finish(std::chrono::milliseconds(500));
        }
        return metrics_;
    }

private:
    static uint64_t elapsed_ns(std::chrono::steady_clock::time_point since) {
        return static_cast<uint64_t>(
            std::chrono::duration_cast<std::chrono::nanoseconds>(
                std::chrono::steady_clock::now() - since)
                .count());
    }

    std::optional<std::chrono::milliseconds> read_deadline() const {
        if (config_.timeout_ms == 0) return std::nullopt;
        // Give a solver honoring its own timeout option a chance to answer
        // "unknown" before the watchdog kills it.
        return std::chrono::milliseconds(config_.timeout_ms + 500);
    }

    void handshake() {
        backend_->submit(Command::set_option("print-success", "false"));
        backend_->submit(Command::set_option("produce-models", "true"));
        backend_->submit(Command::set_logic(config_.logic));
        if (config_.timeout_ms > 0 && want_timeout_option())
            backend_->submit(Command::set_option("timeout",
                                                 std::to_string(config_.timeout_ms)));
        if (config_.handshake_probe_ms > 0) {
            auto err = backend_->probe_error(
                std::chrono::milliseconds(config_.handshake_probe_ms));
            if (err)
                throw HandshakeError("solver rejected the handshake: " + *err);
        }
    }

    bool want_timeout_option() const {
        switch (config_.timeout_option) {
        case SolverConfig::TimeoutOption::Always: return true;
        case SolverConfig::TimeoutOption::Never: return false;
        case SolverConfig::TimeoutOption::Auto: break;
        }
        if (config_.command.empty()) return false;
        std::string base = config_.command[0];
        size_t slash = base.find_last_of('/');
        if (slash != std::string::npos) base = base.substr(slash + 1);
        return base.find("z3") != std::string::npos;
    }

    void ensure_declared(std::span<const Conjunct> conjuncts, size_t level) {
        DeclaredMap flat;
        for (const auto& [name, entry] : declared_) flat.emplace(name, entry.sig);
        for (const Command& c : declarations_for(conjuncts, flat)) {
            backend_->submit(c);
            declared_[c.name] = DeclEntry{DeclSig{c.arg_sorts, c.sort}, level};
        }
    }

    void declare_guard(const AssumptionVar& v) {
        if (declared_.count(v.name)) return;
        backend_->submit(Command::declare_const(v.name, Sort::boolean()));
        declared_[v.name] = DeclEntry{DeclSig{{}, Sort::boolean()}, 0};
    }

    void prune_declared_above(size_t level) {
        for (auto it = declared_.begin(); it != declared_.end();) {
            if (it->second.level > level)
                it = declared_.erase(it);
            else
                ++it;
        }
    }

    SatResult checked_run(std::span<const Conjunct> query, Model* model_out) {
        if (closed_) throw Error("session is closed");
        if (query.empty()) throw Error("check requires a non-empty query");
        metrics_.prefix_len_sum += common_prefix_len(prev_query_, query);
        for (int attempt = 0;; ++attempt) {
            try {
                SatResult r = dispatch(query, model_out);
                prev_query_.assign(query.begin(), query.end());
                return r;
            } catch (const SolverCrash&) {
                if (!config_.restart_on_crash || attempt >= 1) throw;
                restart_and_replay();
            }
        }
    }

    SatResult dispatch(std::span<const Conjunct> query, Model* model_out) {
        auto t0 = std::chrono::steady_clock::now();
        SatResult r = [&] {
            switch (strategy_) {
            case Strategy::Naive: return run_naive(query, model_out);
            case Strategy::PP: return run_pp(query, model_out);
            case Strategy::CSA: return run_csa(query, model_out);
            }
            throw Error("unreachable strategy");
        }();
        metrics_.checks += 1;
        switch (r.verdict) {
        case SatResult::Verdict::Sat: metrics_.sat += 1; break;
        case SatResult::Verdict::Unsat: metrics_.unsat += 1; break;
        case SatResult::Verdict::Unknown: metrics_.unknown += 1; break;
        }
        metrics_.solver_wall_ns += elapsed_ns(t0);
        return r;
    }

    /// Bracket every check with push/assert-all/check/pop; the solver keeps
    /// only the base frame (declarations) between checks.
    SatResult run_naive(std::span<const Conjunct> query, Model* model_out) {
        ensure_declared(query, 0); // at the base frame, so pops keep them
        backend_->submit(Command::push(1));
        metrics_.pushes += 1;
        for (const Conjunct& c : query) {
            backend_->submit(Command::assert_term(c.term()));
            metrics_.asserts += 1;
        }
        backend_->submit(Command::check_sat());
        auto verdict = backend_->read_verdict(read_deadline());
        if (!verdict) return on_timeout();
        if (model_out && verdict->is_sat()) fetch_model(*model_out);
        backend_->submit(Command::pop(1));
        metrics_.pops += 1;
        return *verdict;
    }

    /// Pop frames until the solver stack is a prefix of the query, push the
    /// remaining conjuncts one frame each, then check.
    SatResult run_pp(std::span<const Conjunct> query, Model* model_out) {
        AlignmentPlan plan = plan_pp(pp_stack_, query);
        size_t depth = pp_stack_.size() - plan.pops;
        if (plan.pops > 0) {
            backend_->submit(Command::pop(static_cast<uint32_t>(plan.pops)));
            metrics_.pops += plan.pops;
            prune_declared_above(depth);
        }
        ensure_declared(plan.pushes, depth);
        for (const Conjunct& c : plan.pushes) {
            backend_->submit(Command::push(1));
            metrics_.pushes += 1;
            backend_->submit(Command::assert_term(c.term()));
            metrics_.asserts += 1;
        }
        pp_stack_.assign(query.begin(), query.end());
        backend_->submit(Command::check_sat());
        auto verdict = backend_->read_verdict(read_deadline());
        if (!verdict) return on_timeout();
        if (model_out && verdict->is_sat()) fetch_model(*model_out);
        return *verdict;
    }

    /// Assert each distinct conjunct once as (=> x conjunct) with a fresh
    /// guard x, then select the active conjuncts with check-sat-assuming.
    /// The solver stack stays at depth 0; the assertion set is an append-only
    /// cache and restart is the only eviction.
    SatResult run_csa(std::span<const Conjunct> query, Model* model_out) {
        CsaPlan plan = plan_csa(csa_map_, next_assumption_, query);
        for (const auto& [var, conjunct] : plan.new_assertions) {
            std::span<const Conjunct> one(&conjunct, 1);
            ensure_declared(one, 0);
            declare_guard(var);
            backend_->submit(Command::assert_term(
                mk_implies(mk_var(var.name, Sort::boolean()), conjunct.term())));
            metrics_.asserts += 1;
            csa_map_.emplace(conjunct, var);
            next_assumption_ = var.index + 1;
        }
        std::vector<std::string> names;
        names.reserve(plan.assumptions.size());
        for (const AssumptionVar& v : plan.assumptions) names.push_back(v.name);
        backend_->submit(Command::check_sat_assuming(std::move(names)));
        auto verdict = backend_->read_verdict(read_deadline());
        if (!verdict) return on_timeout();
        if (model_out && verdict->is_sat()) fetch_model(*model_out);
        return *verdict;
    }

    void fetch_model(Model& out) {
        backend_->submit(Command::get_model());
        out = backend_->read_model(read_deadline());
    }

    SatResult on_timeout() {
        backend_->terminate();
        if (config_.restart_on_crash) restart_and_replay();
        return SatResult::unknown("timeout");
    }

    /// Fresh process, handshake, and strategy state rebuilt: CSA re-asserts
    /// its whole map (in assumption-variable order), PP re-pushes its stack.
    /// Replayed asserts are counted separately from first-time asserts.
    void restart_and_replay() {
        metrics_.restarts += 1;
        backend_->terminate();
        backend_ = factory_();
        declared_.clear();
        handshake();
        switch (strategy_) {
        case Strategy::Naive:
            break;
        case Strategy::PP: {
            ensure_declared(pp_stack_, 0);
            for (const Conjunct& c : pp_stack_) {
                backend_->submit(Command::push(1));
                backend_->submit(Command::assert_term(c.term()));
                metrics_.replayed_asserts += 1;
            }
            break;
        }
        case Strategy::CSA: {
            std::vector<std::pair<AssumptionVar, Conjunct>> entries;
            entries.reserve(csa_map_.size());
            for (const auto& [c, v] : csa_map_) entries.emplace_back(v, c);
            std::sort(entries.begin(), entries.end(),
                      [](const auto& a, const auto& b) {
                          return a.first.index < b.first.index;
                      });
            for (const auto& [var, conjunct] : entries) {
                std::span<const Conjunct> one(&conjunct, 1);
                ensure_declared(one, 0);
                declare_guard(var);
                backend_->submit(Command::assert_term(
                    mk_implies(mk_var(var.name, Sort::boolean()), conjunct.term())));
                metrics_.replayed_asserts += 1;
            }
            break;
        }
        }
    }

    struct DeclEntry {
        DeclSig sig;
        size_t level = 0; // solver stack depth at emission; popped below it, gone
    };

    SolverConfig config_;
    Strategy strategy_;
    BackendFactory factory_;
    std::unique_ptr<SolverBackend> backend_;
    std::map<std::string, DeclEntry> declared_;
    std::vector<Conjunct> pp_stack_;
    CsaMap csa_map_;
    uint64_t next_assumption_ = 0;
    std::vector<Conjunct> prev_query_;
    Metrics metrics_;
    std::chrono::steady_clock::time_point opened_at_;
    bool closed_ = false;
};

// ---------------------------------------------------------------------------

/// Splits a command line on whitespace (no quoting; solver commands are
/// simple argv lists).
inline std::vector<std::string> split_command(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string word;
    while (in >> word) out.push_back(word);
    return out;
}

/// Opens a session against an external solver process. The SMTLOG_SOLVER
/// environment variable, when set, overrides the configured command.
inline std::unique_ptr<Session> open_session(SolverConfig config, Strategy strategy) {
    if (const char* env = std::getenv("SMTLOG_SOLVER"); env && *env)
        config.command = split_command(env);
    if (config.command.empty())
        throw SpawnError("no solver command configured");
    auto factory = [config]() -> std::unique_ptr<SolverBackend> {
        return std::make_unique<ProcessBackend>(config.command, config.stderr_log);
    };
    return std::make_unique<Session>(std::move(config), strategy, std::move(factory));
}

/// Opens a session against the in-process brute-force reference backend.
/// Useful as a hermetic stand-in for a solver process; verdicts are decided
/// by reference_check over the given domain bound.
inline std::unique_ptr<Session>
open_reference_session(Strategy strategy, int domain_bound = kDefaultReferenceBound,
                       std::vector<std::string> accepted_logics = {},
                       std::string logic = "ALL") {
    SolverConfig config;
    config.logic = std::move(logic);
    config.handshake_probe_ms = accepted_logics.empty() ? 0 : 1;
    auto factory = [domain_bound, accepted_logics]() -> std::unique_ptr<SolverBackend> {
        return std::make_unique<ReferenceBackend>(domain_bound, accepted_logics);
    };
    return std::make_unique<Session>(std::move(config), strategy, std::move(factory));
}

} // namespace smtlog
