#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smtlog/canonical.hpp"
#include "smtlog/eval.hpp"
#include "smtlog/sexpr.hpp"
#include "smtlog/term.hpp"

namespace smtlog {

// ---------------------------------------------------------------------------
// Term serialization: SMT-LIB 2.6 concrete syntax, deterministic bytes.

namespace detail {

inline void serialize_term_rec(Term t, std::string& out) {
    switch (t.kind()) {
    case NodeKind::Const:
        if (t.sort().is_bool()) {
            out += t.bool_value() ? "true" : "false";
        } else if (t.sort().is_int()) {
            if (t.num_value() < 0) {
                out += "(- ";
                out += BigInt(-t.num_value()).str();
                out += ')';
            } else {
                out += t.num_value().str();
            }
        } else { // BitVec: binary literal, exactly width digits
            uint32_t w = t.sort().bv_width();
            out += "#b";
            for (uint32_t i = w; i-- > 0;)
                out += ((t.num_value() >> i) & 1) != 0 ? '1' : '0';
        }
        return;
    case NodeKind::Var:
        out += t.symbol();
        return;
    case NodeKind::App:
        break;
    }
    out += '(';
    if (t.op() == Op::Uf) {
        out += t.symbol();
    } else if (t.op() == Op::Extract) {
        out += "(_ extract ";
        out += std::to_string(t.extract_hi());
        out += ' ';
        out += std::to_string(t.extract_lo());
        out += ')';
    } else {
        out += op_name(t.op());
    }
    for (size_t i = 0; i < t.arity(); ++i) {
        out += ' ';
        serialize_term_rec(t.arg(i), out);
    }
    out += ')';
}

} // namespace detail

inline std::string serialize_term(Term t) {
    std::string out;
    detail::serialize_term_rec(t, out);
    return out;
}

// ---------------------------------------------------------------------------
// Commands

struct Command {
    enum class Kind {
        SetLogic, SetOption, DeclareConst, DeclareFun, Assert,
        Push, Pop, CheckSat, CheckSatAssuming, GetModel, Exit,
    };

    Kind kind = Kind::CheckSat;
    std::string name;                     // logic / option key / symbol
    std::string value;                    // option value
    Sort sort = Sort::boolean();          // declare-const sort, declare-fun return
    std::vector<Sort> arg_sorts;          // declare-fun
    std::optional<Term> term;             // assert
    uint32_t n = 1;                       // push / pop
    std::vector<std::string> assumptions; // check-sat-assuming literals

    static Command set_logic(std::string logic) {
        Command c;
        c.kind = Kind::SetLogic;
        c.name = std::move(logic);
        return c;
    }
    static Command set_option(std::string key, std::string val) {
        Command c;
        c.kind = Kind::SetOption;
        c.name = std::move(key);
        c.value = std::move(val);
        return c;
    }
    static Command declare_const(std::string sym, Sort s) {
        Command c;
        c.kind = Kind::DeclareConst;
        c.name = std::move(sym);
        c.sort = std::move(s);
        return c;
    }
    static Command declare_fun(std::string sym, std::vector<Sort> args, Sort ret) {
        Command c;
        c.kind = Kind::DeclareFun;
        c.name = std::move(sym);
        c.arg_sorts = std::move(args);
        c.sort = std::move(ret);
        return c;
    }
    static Command assert_term(Term t) {
        Command c;
        c.kind = Kind::Assert;
        c.term = t;
        return c;
    }
    static Command push(uint32_t n) {
        if (n < 1) throw SortError("push requires n >= 1");
        Command c;
        c.kind = Kind::Push;
        c.n = n;
        return c;
    }
    static Command pop(uint32_t n) {
        if (n < 1) throw SortError("pop requires n >= 1");
        Command c;
        c.kind = Kind::Pop;
        c.n = n;
        return c;
    }
    static Command check_sat() {
        Command c;
        c.kind = Kind::CheckSat;
        return c;
    }
    static Command check_sat_assuming(std::vector<std::string> lits) {
        if (lits.empty())
            throw SortError("check-sat-assuming requires a non-empty literal list");
        Command c;
        c.kind = Kind::CheckSatAssuming;
        c.assumptions = std::move(lits);
        return c;
    }
    static Command get_model() {
        Command c;
        c.kind = Kind::GetModel;
        return c;
    }
    static Command exit_solver() {
        Command c;
        c.kind = Kind::Exit;
        return c;
    }
};

/// One newline-terminated SMT-LIB command line.
inline std::string serialize_command(const Command& c) {
    std::string out;
    switch (c.kind) {
    case Command::Kind::SetLogic:
        out = "(set-logic " + c.name + ")";
        break;
    case Command::Kind::SetOption:
        out = "(set-option :" + c.name + " " + c.value + ")";
        break;
    case Command::Kind::DeclareConst:
        out = "(declare-const " + c.name + " " + c.sort.smtlib() + ")";
        break;
    case Command::Kind::DeclareFun: {
        out = "(declare-fun " + c.name + " (";
        for (size_t i = 0; i < c.arg_sorts.size(); ++i) {
            if (i) out += ' ';
            out += c.arg_sorts[i].smtlib();
        }
        out += ") " + c.sort.smtlib() + ")";
        break;
    }
    case Command::Kind::Assert:
        out = "(assert " + serialize_term(*c.term) + ")";
        break;
    case Command::Kind::Push:
        out = "(push " + std::to_string(c.n) + ")";
        break;
    case Command::Kind::Pop:
        out = "(pop " + std::to_string(c.n) + ")";
        break;
    case Command::Kind::CheckSat:
        out = "(check-sat)";
        break;
    case Command::Kind::CheckSatAssuming: {
        out = "(check-sat-assuming (";
        for (size_t i = 0; i < c.assumptions.size(); ++i) {
            if (i) out += ' ';
            out += c.assumptions[i];
        }
        out += "))";
        break;
    }
    case Command::Kind::GetModel:
        out = "(get-model)";
        break;
    case Command::Kind::Exit:
        out = "(exit)";
        break;
    }
    out += '\n';
    return out;
}

// ---------------------------------------------------------------------------
// Responses

struct SatResult {
    enum class Verdict { Sat, Unsat, Unknown };

    Verdict verdict = Verdict::Unknown;
    std::optional<std::string> unknown_reason; // timeout | incomplete | solver text

    static SatResult sat() { return {Verdict::Sat, std::nullopt}; }
    static SatResult unsat() { return {Verdict::Unsat, std::nullopt}; }
    static SatResult unknown(std::string reason) {
        return {Verdict::Unknown, std::move(reason)};
    }

    bool is_sat() const { return verdict == Verdict::Sat; }
    bool is_unsat() const { return verdict == Verdict::Unsat; }
    bool is_unknown() const { return verdict == Verdict::Unknown; }

    friend bool operator==(const SatResult& a, const SatResult& b) {
        return a.verdict == b.verdict; // reason is diagnostic only
    }
    friend bool operator!=(const SatResult& a, const SatResult& b) {
        return !(a == b);
    }
};

inline const char* verdict_name(const SatResult& r) {
    switch (r.verdict) {
    case SatResult::Verdict::Sat: return "sat";
    case SatResult::Verdict::Unsat: return "unsat";
    case SatResult::Verdict::Unknown: return "unknown";
    }
    return "?";
}

/// Parses one check-sat response token. `(error "...")` raises ProtocolError
/// carrying the raw solver text; it is not a verdict.
inline SatResult parse_check_sat_response(std::string_view text) {
    size_t b = text.find_first_not_of(" \t\r\n");
    size_t e = text.find_last_not_of(" \t\r\n");
    std::string_view tok =
        b == std::string_view::npos ? std::string_view{} : text.substr(b, e - b + 1);
    if (tok == "sat") return SatResult::sat();
    if (tok == "unsat") return SatResult::unsat();
    if (tok == "unknown") return SatResult::unknown("incomplete");
    if (!tok.empty() && tok.front() == '(') {
        SExpr s = parse_sexpr(tok);
        if (!s.is_atom && !s.items.empty() && s.items[0].is_atom &&
            s.items[0].atom == "error")
            throw ProtocolError("solver reported an error", std::string(tok));
    }
    throw ProtocolError("unrecognized check-sat response", std::string(text));
}

// ---------------------------------------------------------------------------
// Models

struct ModelBinding {
    std::string name;
    Sort sort = Sort::boolean();
    ConstValue value = false;
};

struct Model {
    std::vector<ModelBinding> bindings; // unique names, parse order
    bool skipped_entries = false;       // non-zero-arity define-funs were dropped

    const ModelBinding* find(std::string_view name) const {
        for (const auto& b : bindings)
            if (b.name == name) return &b;
        return nullptr;
    }

    /// Bindings as an evaluation assignment (vars keyed by name+sort).
    Assignment as_assignment() const {
        Assignment a;
        for (const auto& b : bindings) a.emplace(mk_var(b.name, b.sort), b.value);
        return a;
    }
};

namespace detail {

inline std::optional<Sort> parse_sort_sexpr(const SExpr& s) {
    if (s.is_atom) {
        if (s.atom == "Bool") return Sort::boolean();
        if (s.atom == "Int") return Sort::integer();
        if (is_simple_symbol(s.atom)) return Sort::uninterpreted(s.atom);
        return std::nullopt;
    }
    if (s.items.size() == 3 && s.items[0].is_atom && s.items[0].atom == "_" &&
        s.items[1].is_atom && s.items[1].atom == "BitVec" && s.items[2].is_atom) {
        try {
            return Sort::bitvec(static_cast<uint32_t>(std::stoul(s.items[2].atom)));
        } catch (...) {
            return std::nullopt;
        }
    }
    return std::nullopt;
}

inline bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    return true;
}

inline std::optional<ConstValue> parse_const_sexpr(const SExpr& v, const Sort& sort) {
    if (v.is_atom) {
        const std::string& a = v.atom;
        if (sort.is_bool()) {
            if (a == "true") return ConstValue(true);
            if (a == "false") return ConstValue(false);
            return std::nullopt;
        }
        if (a.size() > 2 && a[0] == '#' && (a[1] == 'b' || a[1] == 'x')) {
            BigInt bits = 0;
            uint32_t width = 0;
            if (a[1] == 'b') {
                for (size_t i = 2; i < a.size(); ++i) {
                    if (a[i] != '0' && a[i] != '1') return std::nullopt;
                    bits = (bits << 1) | (a[i] == '1' ? 1 : 0);
                }
                width = static_cast<uint32_t>(a.size() - 2);
            } else {
                for (size_t i = 2; i < a.size(); ++i) {
                    int d;
                    char c = a[i];
                    if (c >= '0' && c <= '9') d = c - '0';
                    else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
                    else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
                    else return std::nullopt;
                    bits = (bits << 4) | d;
                }
                width = static_cast<uint32_t>((a.size() - 2) * 4);
            }
            if (!sort.is_bitvec() || sort.bv_width() != width) return std::nullopt;
            return ConstValue(BvValue{width, bits});
        }
        if (all_digits(a)) {
            if (!sort.is_int()) return std::nullopt;
            return ConstValue(BigInt(a));
        }
        return std::nullopt;
    }
    // (- n) negative integer literal
    if (v.items.size() == 2 && v.items[0].is_atom && v.items[0].atom == "-" &&
        v.items[1].is_atom && all_digits(v.items[1].atom) && sort.is_int())
        return ConstValue(BigInt("-" + v.items[1].atom));
    return std::nullopt;
}

} // namespace detail

/// Parses a `(model ...)` or bare paren list of define-fun entries.
/// Zero-arity entries over supported sorts become bindings; anything with
/// arguments is skipped and flags the model. Unbalanced input or an
/// unparseable constant raises ProtocolError.
inline Model parse_model(std::string_view text) {
    SExpr top = parse_sexpr(text);
    if (top.is_atom)
        throw ProtocolError("model response is not a paren list", std::string(text));
    std::span<const SExpr> entries(top.items);
    if (!entries.empty() && entries.front().is_atom && entries.front().atom == "model")
        entries = entries.subspan(1); // older solvers prefix the list with `model`

    Model m;
    for (const SExpr& e : entries) {
        if (e.is_atom || e.items.size() < 5 || !e.items[0].is_atom ||
            e.items[0].atom != "define-fun" || !e.items[1].is_atom) {
            m.skipped_entries = true;
            continue;
        }
        const std::string& name = e.items[1].atom;
        const SExpr& params = e.items[2];
        if (params.is_atom || !params.items.empty()) {
            m.skipped_entries = true; // non-zero arity
            continue;
        }
        auto sort = detail::parse_sort_sexpr(e.items[3]);
        if (!sort || sort->is_uninterpreted()) {
            m.skipped_entries = true;
            continue;
        }
        auto value = detail::parse_const_sexpr(e.items[4], *sort);
        if (!value)
            throw ProtocolError("unparseable model constant for '" + name + "'",
                                std::string(text));
        for (const auto& b : m.bindings)
            if (b.name == name)
                throw ProtocolError("duplicate model binding '" + name + "'",
                                    std::string(text));
        m.bindings.push_back(ModelBinding{name, *sort, *value});
    }
    return m;
}

/// Renders a model as a paren list of zero-arity define-funs; the exact shape
/// parse_model accepts.
inline std::string serialize_model(const Model& m) {
    std::string out = "(";
    for (size_t i = 0; i < m.bindings.size(); ++i) {
        const auto& b = m.bindings[i];
        if (i) out += "\n ";
        out += "(define-fun " + b.name + " () " + b.sort.smtlib() + " ";
        if (std::holds_alternative<bool>(b.value)) {
            out += std::get<bool>(b.value) ? "true" : "false";
        } else if (std::holds_alternative<BigInt>(b.value)) {
            const BigInt& v = std::get<BigInt>(b.value);
            out += v < 0 ? "(- " + BigInt(-v).str() + ")" : v.str();
        } else {
            const BvValue& v = std::get<BvValue>(b.value);
            out += "#b";
            for (uint32_t j = v.width; j-- > 0;)
                out += ((v.bits >> j) & 1) != 0 ? '1' : '0';
        }
        out += ")";
    }
    out += ")";
    return out;
}

// ---------------------------------------------------------------------------
// Declarations

/// Signature of a declared symbol; variables have no argument sorts.
struct DeclSig {
    std::vector<Sort> arg_sorts;
    Sort ret = Sort::boolean();

    friend bool operator==(const DeclSig& a, const DeclSig& b) {
        return a.arg_sorts == b.arg_sorts && a.ret == b.ret;
    }
};

using DeclaredMap = std::map<std::string, DeclSig>;

/// DeclareConst/DeclareFun commands for every free variable and
/// uninterpreted function of `conjuncts` not already in `declared`, in
/// sorted-name order. The caller updates `declared` after emitting. Raises
/// SortClash when one name carries two different signatures, either across
/// the conjuncts or against an existing declaration.
inline std::vector<Command> declarations_for(std::span<const Conjunct> conjuncts,
                                             const DeclaredMap& declared) {
    std::vector<Term> terms;
    terms.reserve(conjuncts.size());
    for (const Conjunct& c : conjuncts) terms.push_back(c.term());
    SymbolSet syms = collect_symbols(terms);

    std::map<std::string, DeclSig> wanted;
    auto add = [&](const std::string& name, DeclSig sig) {
        auto it = wanted.find(name);
        if (it != wanted.end()) {
            if (!(it->second == sig))
                throw SortClash("symbol '" + name +
                                "' used with two different signatures");
            return;
        }
        auto dit = declared.find(name);
        if (dit != declared.end()) {
            if (!(dit->second == sig))
                throw SortClash("symbol '" + name +
                                "' clashes with an earlier declaration");
            return; // already declared
        }
        wanted.emplace(name, std::move(sig));
    };
    for (Term v : syms.vars) add(v.symbol(), DeclSig{{}, v.sort()});
    for (const UfSignature& f : syms.ufs) add(f.name, DeclSig{f.arg_sorts, f.ret});

    std::vector<Command> out;
    for (auto& [name, sig] : wanted) {
        if (sig.arg_sorts.empty())
            out.push_back(Command::declare_const(name, sig.ret));
        else
            out.push_back(Command::declare_fun(name, sig.arg_sorts, sig.ret));
    }
    return out;
}

} // namespace smtlog
