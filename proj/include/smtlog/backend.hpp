#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smtlog/process.hpp"
#include "smtlog/refcheck.hpp"
#include "smtlog/smtlib.hpp"

namespace smtlog {

/// Reserved prefix for CSA assumption variables. Program validation rejects
/// user symbols with this prefix, so backends may rely on it.
inline constexpr std::string_view kAssumptionPrefix = "__csa_";

inline bool is_assumption_symbol(std::string_view name) {
    return name.substr(0, kAssumptionPrefix.size()) == kAssumptionPrefix;
}

/// Transport for SMT-LIB commands. Implementations: a child solver process
/// speaking SMT-LIB text, and an in-process brute-force reference backend.
class SolverBackend {
public:
    virtual ~SolverBackend() = default;

    /// Sends one command. Throws SolverCrash when the backend is gone.
    virtual void submit(const Command& c) = 0;

    /// Reads the verdict of the check command submitted last. nullopt means
    /// the deadline expired (caller decides to kill/restart). Throws
    /// SolverCrash on EOF and ProtocolError on an (error ...) response.
    virtual std::optional<SatResult>
    read_verdict(std::optional<std::chrono::milliseconds> deadline) = 0;

    /// Reads the model after a sat check.
    virtual Model read_model(std::optional<std::chrono::milliseconds> deadline) = 0;

    /// Returns any pending error text within the probe window; used to catch
    /// a rejected handshake before the first check.
    virtual std::optional<std::string> probe_error(std::chrono::milliseconds window) = 0;

    virtual bool alive() = 0;
    virtual void terminate() = 0;

    /// Graceful close; Exit is expected to have been submitted already.
    virtual void finish(std::chrono::milliseconds grace) = 0;
};

// ---------------------------------------------------------------------------

class ProcessBackend final : public SolverBackend {
public:
    ProcessBackend(std::vector<std::string> argv, std::string stderr_path)
        : proc_(ChildProcess::spawn(argv, stderr_path)) {}

    void submit(const Command& c) override {
        if (!proc_.write_all(serialize_command(c)))
            throw SolverCrash("solver process closed its input pipe");
    }

    std::optional<SatResult>
    read_verdict(std::optional<std::chrono::milliseconds> deadline) override {
        std::string line;
        switch (proc_.read_line(line, deadline)) {
        case ChildProcess::IoStatus::Timeout: return std::nullopt;
        case ChildProcess::IoStatus::Eof:
            throw SolverCrash("solver process exited while a check was pending");
        case ChildProcess::IoStatus::Ok: break;
        }
        return parse_check_sat_response(line);
    }

    Model read_model(std::optional<std::chrono::milliseconds> deadline) override {
        std::string text;
        switch (proc_.read_balanced(text, deadline)) {
        case ChildProcess::IoStatus::Timeout:
            throw ProtocolError("timed out waiting for a model");
        case ChildProcess::IoStatus::Eof:
            throw SolverCrash("solver process exited while a model was pending");
        case ChildProcess::IoStatus::Ok: break;
        }
        return parse_model(text);
    }

    std::optional<std::string> probe_error(std::chrono::milliseconds window) override {
        std::string line;
        switch (proc_.read_line(line, window)) {
        case ChildProcess::IoStatus::Ok: return line;
        case ChildProcess::IoStatus::Eof:
            throw SolverCrash("solver process exited during the handshake");
        case ChildProcess::IoStatus::Timeout: break;
        }
        return std::nullopt;
    }

    bool alive() override { return proc_.alive(); }
    void terminate() override { proc_.kill_now(); }
    void finish(std::chrono::milliseconds grace) override { proc_.shutdown(grace); }

private:
    ChildProcess proc_;
};

// ---------------------------------------------------------------------------

/// In-process backend with the same observable protocol as a solver process,
/// decided by brute-force enumeration (reference_check). Understands the
/// artifact's assumption pattern: an asserted implication whose antecedent
/// is a reserved `__csa_` variable is treated as a guarded conjunct that
/// check-sat-assuming enables by listing the guard.
class ReferenceBackend final : public SolverBackend {
public:
    explicit ReferenceBackend(int domain_bound = kDefaultReferenceBound,
                              std::vector<std::string> accepted_logics = {})
        : bound_(domain_bound), accepted_logics_(std::move(accepted_logics)) {}

    void submit(const Command& c) override {
        if (!alive_) throw SolverCrash("reference backend was terminated");
        switch (c.kind) {
        case Command::Kind::SetLogic:
            if (!accepted_logics_.empty()) {
                bool ok = false;
                for (const auto& l : accepted_logics_) ok = ok || l == c.name;
                if (!ok)
                    pending_error_ = "(error \"unsupported logic " + c.name + "\")";
            }
            return;
        case Command::Kind::SetOption:
            return;
        case Command::Kind::DeclareConst:
        case Command::Kind::DeclareFun:
            return; // sorts travel on the terms themselves

        case Command::Kind::Assert: {
            Term t = *c.term;
            if (t.is_app() && t.op() == Op::Implies && t.arg(0).is_var() &&
                is_assumption_symbol(t.arg(0).symbol())) {
                frames_.back().guards.emplace_back(t.arg(0).symbol(), t.arg(1));
            } else {
                frames_.back().asserts.push_back(t);
            }
            return;
        }
        case Command::Kind::Push:
            for (uint32_t i = 0; i < c.n; ++i) frames_.emplace_back();
            return;
        case Command::Kind::Pop: {
            if (frames_.size() <= c.n) { // rejected whole, no partial pop
                pending_error_ = "(error \"pop below the base frame\")";
                return;
            }
            frames_.resize(frames_.size() - c.n);
            return;
        }
        case Command::Kind::CheckSat:
            run_check({});
            return;
        case Command::Kind::CheckSatAssuming:
            run_check(c.assumptions);
            return;
        case Command::Kind::GetModel:
            return; // model served from the stored witness
        case Command::Kind::Exit:
            alive_ = false;
            return;
        }
    }

    std::optional<SatResult>
    read_verdict(std::optional<std::chrono::milliseconds>) override {
        if (pending_error_) {
            std::string text = *std::exchange(pending_error_, std::nullopt);
            throw ProtocolError("solver reported an error", text);
        }
        if (!last_verdict_)
            throw ProtocolError("no check was submitted");
        return *std::exchange(last_verdict_, std::nullopt);
    }

    Model read_model(std::optional<std::chrono::milliseconds>) override {
        if (!last_witness_) throw ProtocolError("no model is available");
        return model_from_witness(*last_witness_);
    }

    std::optional<std::string> probe_error(std::chrono::milliseconds) override {
        if (pending_error_) return *std::exchange(pending_error_, std::nullopt);
        return std::nullopt;
    }

    bool alive() override { return alive_; }
    void terminate() override { alive_ = false; }
    void finish(std::chrono::milliseconds) override { alive_ = false; }

private:
    struct Frame {
        std::vector<Term> asserts;
        std::vector<std::pair<std::string, Term>> guards;
    };

    void run_check(const std::vector<std::string>& assumed) {
        std::vector<Conjunct> active;
        auto add = [&](Term t) { active.push_back(canonicalize(t)); };
        for (const Frame& f : frames_)
            for (Term t : f.asserts) add(t);
        for (const std::string& name : assumed) {
            bool found = false;
            for (const Frame& f : frames_) {
                for (const auto& [g, body] : f.guards)
                    if (g == name) {
                        add(body);
                        found = true;
                    }
            }
            // An assumed literal with no guarded conjunct is a plain Bool
            // variable assumed true.
            if (!found) add(mk_var(name, Sort::boolean()));
        }
        // Guarded conjuncts whose guard is not assumed stay disabled: the
        // guard variable occurs nowhere else, so the implication is
        // satisfiable with the guard false and contributes nothing.
        last_witness_ = reference_witness(active, bound_);
        last_verdict_ = last_witness_ ? SatResult::sat() : SatResult::unsat();
    }

    int bound_;
    std::vector<std::string> accepted_logics_; // empty = accept all
    std::vector<Frame> frames_{Frame{}};
    std::optional<SatResult> last_verdict_;
    std::optional<Assignment> last_witness_;
    std::optional<std::string> pending_error_;
    bool alive_ = true;
};

} // namespace smtlog
