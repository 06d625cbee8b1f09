#pragma once

#include <istream>
#include <ostream>
#include <set>
#include <thread>
#include <unistd.h>

#include "smtlog/backend.hpp"
#include "smtlog/datalog/parser.hpp" // SmtTermParser
#include "smtlog/sexpr.hpp"

namespace smtlog::refsolver {

/// A small SMT-LIB 2.6 solver loop over the brute-force reference backend.
/// It exists so the process-facing paths (spawning, the wire protocol, crash
/// recovery, timeouts) can be exercised without an external SMT solver.
struct Options {
    int bound = kDefaultReferenceBound;
    int sleep_ms = 0;     // delay before each check response
    long die_after = -1;  // abrupt _exit after this many commands (< 0 = never)
    bool strict_logics = true;
};

namespace detail {

inline const std::set<std::string>& known_logics() {
    static const std::set<std::string> logics = {
        "ALL",     "QF_LIA",   "LIA",      "QF_BV",    "QF_UFBV", "QF_ABV",
        "QF_UF",   "QF_UFLIA", "QF_AUFLIA", "QF_AUFBV", "QF_IDL",  "QF_UFIDL",
    };
    return logics;
}

inline bool is_operator(const std::string& s) {
    static const std::set<std::string> ops = {
        "not", "and", "or",  "=>",    "ite",   "=",     "+",      "-",
        "*",   "<",   "<=",  ">",     ">=",    "bvadd", "bvsub",  "bvand",
        "bvor", "bvult", "bvule", "concat", "true", "false",
    };
    return ops.count(s) > 0;
}

inline bool is_literal_atom(const std::string& a) {
    if (a.empty()) return false;
    if (a == "true" || a == "false") return true;
    if (std::isdigit(static_cast<unsigned char>(a[0]))) return true;
    if (a.size() > 1 && a[0] == '-' &&
        std::isdigit(static_cast<unsigned char>(a[1])))
        return true;
    if (a.size() > 2 && a[0] == '#') return true;
    return false;
}

struct SolverState {
    ReferenceBackend backend;
    std::map<std::string, Sort> var_sorts;
    std::map<std::string, UfSignature> fun_sigs;
    std::set<std::string> declared;
    // SMT-LIB scopes declarations to assertion levels: names declared inside
    // a frame vanish when that frame is popped.
    std::vector<std::vector<std::string>> decl_scopes{{}};

    explicit SolverState(int bound) : backend(bound) {}

    void record_decl(const std::string& name) {
        declared.insert(name);
        decl_scopes.back().push_back(name);
    }

    void push_scopes(uint32_t n) {
        for (uint32_t i = 0; i < n; ++i) decl_scopes.emplace_back();
    }

    bool pop_scopes(uint32_t n) {
        if (decl_scopes.size() <= n) return false;
        for (uint32_t i = 0; i < n; ++i) {
            for (const std::string& name : decl_scopes.back()) {
                declared.erase(name);
                var_sorts.erase(name);
                fun_sigs.erase(name);
            }
            decl_scopes.pop_back();
        }
        return true;
    }
};

inline void check_symbols_declared(const SExpr& e, const SolverState& st,
                                   bool head_position) {
    if (e.is_atom) {
        if (is_literal_atom(e.atom)) return;
        if (head_position && is_operator(e.atom)) return;
        if (!head_position && (e.atom == "true" || e.atom == "false")) return;
        if (!st.declared.count(e.atom))
            throw ProtocolError("unknown constant or function '" + e.atom + "'");
        return;
    }
    if (e.items.empty()) throw ProtocolError("empty application");
    if (!e.items[0].is_atom) {
        // indexed operator head like (_ extract i j)
        for (size_t i = 1; i < e.items.size(); ++i)
            check_symbols_declared(e.items[i], st, false);
        return;
    }
    check_symbols_declared(e.items[0], st, true);
    for (size_t i = 1; i < e.items.size(); ++i)
        check_symbols_declared(e.items[i], st, false);
}

inline Term parse_term(const SExpr& e, SolverState& st) {
    check_symbols_declared(e, st, false);
    dl::detail::SmtTermParser parser(st.var_sorts, st.fun_sigs,
                                     /*allow_reserved=*/true);
    try {
        return parser.parse(e, std::nullopt);
    } catch (const dl::detail::InferFail& f) {
        throw ProtocolError(f.why);
    } catch (const SortError& err) {
        throw ProtocolError(err.what());
    }
}

inline Sort parse_sort(const SExpr& e) {
    auto s = smtlog::detail::parse_sort_sexpr(e);
    if (!s) throw ProtocolError("unsupported sort");
    return *s;
}

} // namespace detail

/// Reads commands from `in` and answers on `out` until (exit) or EOF.
/// Returns the process exit code.
inline int run(std::istream& in, std::ostream& out, const Options& opts) {
    detail::SolverState st(opts.bound);
    long command_count = 0;
    std::string buffer;

    auto reply_error = [&](const std::string& msg) {
        out << "(error \"" << msg << "\")" << std::endl;
    };

    auto handle = [&](const SExpr& cmd) -> bool { // false = exit
        if (cmd.is_atom || cmd.items.empty() || !cmd.items[0].is_atom) {
            reply_error("malformed command");
            return true;
        }
        const std::string& head = cmd.items[0].atom;
        try {
            if (head == "set-logic") {
                if (cmd.items.size() != 2 || !cmd.items[1].is_atom)
                    throw ProtocolError("set-logic expects one symbol");
                if (opts.strict_logics &&
                    !detail::known_logics().count(cmd.items[1].atom))
                    throw ProtocolError("unknown logic " + cmd.items[1].atom);
                return true;
            }
            if (head == "set-option" || head == "set-info") return true;
            if (head == "declare-const" || head == "declare-fun") {
                bool is_fun = head == "declare-fun";
                size_t want = is_fun ? 4 : 3;
                if (cmd.items.size() != want || !cmd.items[1].is_atom)
                    throw ProtocolError(head + ": malformed declaration");
                const std::string& name = cmd.items[1].atom;
                if (st.declared.count(name))
                    throw ProtocolError("symbol '" + name + "' already declared");
                if (is_fun) {
                    const SExpr& params = cmd.items[2];
                    if (params.is_atom) throw ProtocolError("declare-fun: bad params");
                    Sort ret = detail::parse_sort(cmd.items[3]);
                    if (params.items.empty()) {
                        st.var_sorts.emplace(name, ret);
                    } else {
                        UfSignature sig;
                        sig.name = name;
                        for (const SExpr& p : params.items)
                            sig.arg_sorts.push_back(detail::parse_sort(p));
                        sig.ret = ret;
                        st.fun_sigs.emplace(name, sig);
                    }
                } else {
                    Sort sort = detail::parse_sort(cmd.items[2]);
                    st.var_sorts.emplace(name, sort);
                }
                st.record_decl(name);
                return true;
            }
            if (head == "assert") {
                if (cmd.items.size() != 2) throw ProtocolError("assert expects a term");
                Term t = detail::parse_term(cmd.items[1], st);
                if (!t.sort().is_bool())
                    throw ProtocolError("asserted term is not Bool");
                st.backend.submit(Command::assert_term(t));
                return true;
            }
            if (head == "push" || head == "pop") {
                uint32_t n = 1;
                if (cmd.items.size() == 2 && cmd.items[1].is_atom)
                    n = static_cast<uint32_t>(std::stoul(cmd.items[1].atom));
                else if (cmd.items.size() > 2)
                    throw ProtocolError(head + " expects at most one numeral");
                if (head == "push") {
                    st.push_scopes(n);
                    st.backend.submit(Command::push(n));
                } else {
                    if (!st.pop_scopes(n))
                        throw ProtocolError("pop below the base frame");
                    st.backend.submit(Command::pop(n));
                }
                if (auto err = st.backend.probe_error(std::chrono::milliseconds(0)))
                    out << *err << std::endl;
                return true;
            }
            if (head == "check-sat" || head == "check-sat-assuming") {
                Command c = Command::check_sat();
                if (head == "check-sat-assuming") {
                    if (cmd.items.size() != 2 || cmd.items[1].is_atom)
                        throw ProtocolError("check-sat-assuming expects a literal list");
                    std::vector<std::string> lits;
                    for (const SExpr& l : cmd.items[1].items) {
                        if (!l.is_atom)
                            throw ProtocolError(
                                "negated assumption literals are unsupported");
                        if (!st.declared.count(l.atom))
                            throw ProtocolError("unknown assumption literal '" +
                                                l.atom + "'");
                        lits.push_back(l.atom);
                    }
                    c = Command::check_sat_assuming(std::move(lits));
                }
                if (opts.sleep_ms > 0)
                    std::this_thread::sleep_for(
                        std::chrono::milliseconds(opts.sleep_ms));
                st.backend.submit(c);
                auto verdict = st.backend.read_verdict(std::nullopt);
                out << verdict_name(*verdict) << std::endl;
                return true;
            }
            if (head == "get-model") {
                Model m = st.backend.read_model(std::nullopt);
                out << serialize_model(m) << std::endl;
                return true;
            }
            if (head == "exit") return false;
            throw ProtocolError("unsupported command " + head);
        } catch (const ProtocolError& e) {
            std::string msg =
                e.solver_text().empty() ? e.what() : e.solver_text();
            // Responses are single-line; keep error text clean of quotes.
            for (char& c : msg)
                if (c == '"' || c == '\n') c = ' ';
            reply_error(msg);
            return true;
        } catch (const UnsupportedFragment& e) {
            reply_error(e.what());
            return true;
        } catch (const Error& e) {
            reply_error(e.what());
            return true;
        }
    };

    std::string line;
    while (std::getline(in, line)) {
        buffer += line;
        buffer += '\n';
        // Extract every complete s-expression currently buffered.
        while (true) {
            int depth = 0;
            bool seen = false, in_string = false;
            size_t end = std::string::npos;
            for (size_t i = 0; i < buffer.size(); ++i) {
                char c = buffer[i];
                if (in_string) {
                    if (c == '"') in_string = false;
                    continue;
                }
                if (c == '"') in_string = true;
                else if (c == '(') { ++depth; seen = true; }
                else if (c == ')') --depth;
                if (seen && depth == 0) {
                    end = i;
                    break;
                }
            }
            if (end == std::string::npos) break;
            std::string text = buffer.substr(0, end + 1);
            buffer.erase(0, end + 1);
            ++command_count;
            if (opts.die_after >= 0 && command_count > opts.die_after)
                ::_exit(9); // simulate a mid-run solver crash
            SExpr cmd;
            try {
                cmd = parse_sexpr(text);
            } catch (const ProtocolError&) {
                reply_error("unreadable command");
                continue;
            }
            if (!handle(cmd)) return 0;
        }
    }
    return 0;
}

} // namespace smtlog::refsolver
