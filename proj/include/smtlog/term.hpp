#pragma once

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "smtlog/errors.hpp"
#include "smtlog/sort.hpp"

namespace smtlog {

/// Unbounded integer used for Int and bit-vector constant values.
using BigInt = boost::multiprecision::cpp_int;

enum class Op : uint8_t {
    Not, And, Or, Implies, Ite, Eq,
    Add, Sub, Mul, Lt, Le, Gt, Ge,
    BvAdd, BvSub, BvAnd, BvOr, BvUlt, BvUle, Concat, Extract,
    Uf, // uninterpreted function application; symbol carried on the node
};

inline const char* op_name(Op op) {
    switch (op) {
    case Op::Not: return "not";
    case Op::And: return "and";
    case Op::Or: return "or";
    case Op::Implies: return "=>";
    case Op::Ite: return "ite";
    case Op::Eq: return "=";
    case Op::Add: return "+";
    case Op::Sub: return "-";
    case Op::Mul: return "*";
    case Op::Lt: return "<";
    case Op::Le: return "<=";
    case Op::Gt: return ">";
    case Op::Ge: return ">=";
    case Op::BvAdd: return "bvadd";
    case Op::BvSub: return "bvsub";
    case Op::BvAnd: return "bvand";
    case Op::BvOr: return "bvor";
    case Op::BvUlt: return "bvult";
    case Op::BvUle: return "bvule";
    case Op::Concat: return "concat";
    case Op::Extract: return "extract";
    case Op::Uf: return "<uf>";
    }
    return "?";
}

/// Argument lists of these operators may be reordered without changing
/// meaning; canonicalization sorts them.
inline bool op_commutative(Op op) {
    switch (op) {
    case Op::And: case Op::Or: case Op::Eq:
    case Op::Add: case Op::Mul:
    case Op::BvAdd: case Op::BvAnd: case Op::BvOr:
        return true;
    default:
        return false;
    }
}

enum class NodeKind : uint8_t { Const, Var, App };

struct TermNode {
    NodeKind kind;
    Op op = Op::Not;              // App only
    Sort sort = Sort::boolean();
    std::string symbol;           // Var name, or Uf function name
    bool bool_value = false;      // Const of sort Bool
    BigInt num_value;             // Const of sort Int / BitVec
    uint32_t extract_hi = 0, extract_lo = 0; // Extract only
    std::vector<const TermNode*> args;
    uint64_t id = 0;              // intern id, assigned on first construction
    size_t cached_hash = 0;
};

/// Immutable handle to an interned term node. Equality is pointer equality;
/// interning guarantees structurally equal terms share one node.
class Term {
public:
    explicit Term(const TermNode* n) : node_(n) {}

    NodeKind kind() const { return node_->kind; }
    bool is_const() const { return node_->kind == NodeKind::Const; }
    bool is_var() const { return node_->kind == NodeKind::Var; }
    bool is_app() const { return node_->kind == NodeKind::App; }
    Op op() const { return node_->op; }
    const Sort& sort() const { return node_->sort; }
    const std::string& symbol() const { return node_->symbol; }
    bool bool_value() const { return node_->bool_value; }
    const BigInt& num_value() const { return node_->num_value; }
    uint32_t extract_hi() const { return node_->extract_hi; }
    uint32_t extract_lo() const { return node_->extract_lo; }
    size_t arity() const { return node_->args.size(); }
    Term arg(size_t i) const { return Term(node_->args[i]); }
    uint64_t id() const { return node_->id; }
    const TermNode* node() const { return node_; }

    friend bool operator==(Term a, Term b) { return a.node_ == b.node_; }
    friend bool operator!=(Term a, Term b) { return a.node_ != b.node_; }

private:
    const TermNode* node_;
};

struct TermHash {
    size_t operator()(Term t) const {
        return std::hash<const TermNode*>{}(t.node());
    }
};

namespace detail {

inline size_t node_hash(const TermNode& n) {
    size_t h = static_cast<size_t>(n.kind) * 1315423911u;
    auto mix = [&h](size_t v) { h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2); };
    mix(static_cast<size_t>(n.op));
    mix(n.sort.hash());
    mix(std::hash<std::string>{}(n.symbol));
    mix(n.bool_value ? 2u : 1u);
    mix(std::hash<std::string>{}(n.num_value.str()));
    mix(n.extract_hi);
    mix(n.extract_lo);
    for (const TermNode* a : n.args) mix(std::hash<const TermNode*>{}(a));
    return h;
}

inline bool node_equal(const TermNode& a, const TermNode& b) {
    return a.kind == b.kind && a.op == b.op && a.sort == b.sort &&
           a.symbol == b.symbol && a.bool_value == b.bool_value &&
           a.num_value == b.num_value && a.extract_hi == b.extract_hi &&
           a.extract_lo == b.extract_lo && a.args == b.args;
}

/// Process-global hash-consing table. Insert-if-absent under a mutex; nodes
/// are immutable once published and live for the process lifetime.
class TermTable {
public:
    static TermTable& instance() {
        static TermTable t;
        return t;
    }

    const TermNode* intern(TermNode&& proto) {
        proto.cached_hash = node_hash(proto);
        std::lock_guard<std::mutex> lock(mu_);
        auto it = set_.find(&proto);
        if (it != set_.end()) return *it;
        proto.id = next_id_++;
        nodes_.push_back(std::move(proto));
        const TermNode* stored = &nodes_.back();
        set_.insert(stored);
        return stored;
    }

    uint64_t size() const {
        std::lock_guard<std::mutex> lock(mu_);
        return next_id_;
    }

private:
    struct Hash {
        size_t operator()(const TermNode* n) const { return n->cached_hash; }
    };
    struct Eq {
        bool operator()(const TermNode* a, const TermNode* b) const {
            return node_equal(*a, *b);
        }
    };

    mutable std::mutex mu_;
    std::deque<TermNode> nodes_; // stable addresses
    std::unordered_set<const TermNode*, Hash, Eq> set_;
    uint64_t next_id_ = 0;
};

inline Term intern(TermNode&& proto) {
    return Term(TermTable::instance().intern(std::move(proto)));
}

} // namespace detail

// ---------------------------------------------------------------------------
// Construction

inline Term mk_bool(bool v) {
    TermNode n;
    n.kind = NodeKind::Const;
    n.sort = Sort::boolean();
    n.bool_value = v;
    return detail::intern(std::move(n));
}

inline Term mk_true() { return mk_bool(true); }
inline Term mk_false() { return mk_bool(false); }

inline Term mk_int(BigInt v) {
    TermNode n;
    n.kind = NodeKind::Const;
    n.sort = Sort::integer();
    n.num_value = std::move(v);
    return detail::intern(std::move(n));
}

inline Term mk_int(long long v) { return mk_int(BigInt(v)); }

inline Term mk_bv(BigInt value, uint32_t width) {
    Sort s = Sort::bitvec(width); // validates width >= 1
    if (value < 0 || value >= (BigInt(1) << width))
        throw SortError("bit-vector constant " + value.str() +
                        " out of range for width " + std::to_string(width));
    TermNode n;
    n.kind = NodeKind::Const;
    n.sort = s;
    n.num_value = std::move(value);
    return detail::intern(std::move(n));
}

inline Term mk_var(std::string_view name, Sort sort) {
    if (!is_simple_symbol(name))
        throw SortError("variable name '" + std::string(name) +
                        "' is not a valid SMT-LIB simple symbol");
    TermNode n;
    n.kind = NodeKind::Var;
    n.sort = std::move(sort);
    n.symbol = std::string(name);
    return detail::intern(std::move(n));
}

namespace detail {

inline void require_arity(std::string_view op, const std::vector<Term>& args,
                          size_t lo, size_t hi) {
    if (args.size() < lo || (hi != 0 && args.size() > hi)) {
        std::string want = (hi == 0)   ? "at least " + std::to_string(lo)
                           : (lo == hi) ? "exactly " + std::to_string(lo)
                                        : std::to_string(lo) + ".." + std::to_string(hi);
        throw SortError("operator '" + std::string(op) + "' expects " + want +
                        " argument(s), got " + std::to_string(args.size()));
    }
}

inline void require_sort(std::string_view op, const std::vector<Term>& args,
                         size_t i, const Sort& want) {
    if (args[i].sort() != want)
        throw SortError("argument " + std::to_string(i + 1) + " of '" +
                        std::string(op) + "' has sort " + args[i].sort().smtlib() +
                        ", expected " + want.smtlib());
}

inline Term app(Op op, Sort sort, std::vector<Term> args,
                std::string symbol = {}, uint32_t hi = 0, uint32_t lo = 0) {
    TermNode n;
    n.kind = NodeKind::App;
    n.op = op;
    n.sort = std::move(sort);
    n.symbol = std::move(symbol);
    n.extract_hi = hi;
    n.extract_lo = lo;
    n.args.reserve(args.size());
    for (Term t : args) n.args.push_back(t.node());
    return intern(std::move(n));
}

} // namespace detail

inline Term mk_extract(uint32_t hi, uint32_t lo, Term arg) {
    if (!arg.sort().is_bitvec())
        throw SortError("argument 1 of 'extract' has sort " + arg.sort().smtlib() +
                        ", expected a bit-vector");
    if (hi < lo)
        throw SortError("extract indices must satisfy hi >= lo");
    if (hi >= arg.sort().bv_width())
        throw SortError("extract high index " + std::to_string(hi) +
                        " out of range for width " +
                        std::to_string(arg.sort().bv_width()));
    return detail::app(Op::Extract, Sort::bitvec(hi - lo + 1), {arg}, {}, hi, lo);
}

inline Term mk_uf(std::string_view fname, Sort ret, std::vector<Term> args) {
    if (!is_simple_symbol(fname))
        throw SortError("function name '" + std::string(fname) +
                        "' is not a valid SMT-LIB simple symbol");
    if (args.empty())
        throw SortError("uninterpreted application '" + std::string(fname) +
                        "' needs at least 1 argument (use mk_var for constants)");
    return detail::app(Op::Uf, std::move(ret), std::move(args), std::string(fname));
}

/// Builds an application of a named operator from the fixed signature table.
/// Throws SortError naming the operator and offending position on arity or
/// sort mismatch. `extract` must go through mk_extract (it is indexed).
inline Term mk_term(std::string_view op, const std::vector<Term>& args) {
    using detail::app;
    using detail::require_arity;
    using detail::require_sort;
    const Sort B = Sort::boolean();
    const Sort I = Sort::integer();

    auto all_of_sort = [&](const Sort& s) {
        for (size_t i = 0; i < args.size(); ++i) require_sort(op, args, i, s);
    };
    auto bv_pair = [&]() -> Sort {
        require_arity(op, args, 2, 2);
        if (!args[0].sort().is_bitvec())
            throw SortError("argument 1 of '" + std::string(op) +
                            "' has sort " + args[0].sort().smtlib() +
                            ", expected a bit-vector");
        require_sort(op, args, 1, args[0].sort());
        return args[0].sort();
    };

    if (op == "true") { require_arity(op, args, 0, 0); return mk_true(); }
    if (op == "false") { require_arity(op, args, 0, 0); return mk_false(); }
    if (op == "not") {
        require_arity(op, args, 1, 1);
        require_sort(op, args, 0, B);
        return app(Op::Not, B, args);
    }
    if (op == "and" || op == "or") {
        require_arity(op, args, 2, 0);
        all_of_sort(B);
        return app(op == "and" ? Op::And : Op::Or, B, args);
    }
    if (op == "=>") {
        require_arity(op, args, 2, 2);
        all_of_sort(B);
        return app(Op::Implies, B, args);
    }
    if (op == "ite") {
        require_arity(op, args, 3, 3);
        require_sort(op, args, 0, B);
        if (args[1].sort() != args[2].sort())
            throw SortError("branches of 'ite' have different sorts: " +
                            args[1].sort().smtlib() + " vs " + args[2].sort().smtlib());
        return app(Op::Ite, args[1].sort(), args);
    }
    if (op == "=") {
        require_arity(op, args, 2, 2);
        if (args[0].sort() != args[1].sort())
            throw SortError("argument 2 of '=' has sort " + args[1].sort().smtlib() +
                            ", expected " + args[0].sort().smtlib());
        return app(Op::Eq, B, args);
    }
    if (op == "+" || op == "*") {
        require_arity(op, args, 2, 0);
        all_of_sort(I);
        return app(op == "+" ? Op::Add : Op::Mul, I, args);
    }
    if (op == "-") {
        require_arity(op, args, 1, 0); // unary negation or n-ary subtraction
        all_of_sort(I);
        return app(Op::Sub, I, args);
    }
    if (op == "<" || op == "<=" || op == ">" || op == ">=") {
        require_arity(op, args, 2, 2);
        all_of_sort(I);
        Op o = op == "<" ? Op::Lt : op == "<=" ? Op::Le : op == ">" ? Op::Gt : Op::Ge;
        return app(o, B, args);
    }
    if (op == "bvadd" || op == "bvsub" || op == "bvand" || op == "bvor") {
        Sort s = bv_pair();
        Op o = op == "bvadd" ? Op::BvAdd : op == "bvsub" ? Op::BvSub
             : op == "bvand" ? Op::BvAnd : Op::BvOr;
        return app(o, s, args);
    }
    if (op == "bvult" || op == "bvule") {
        bv_pair();
        return app(op == "bvult" ? Op::BvUlt : Op::BvUle, B, args);
    }
    if (op == "concat") {
        require_arity(op, args, 2, 2);
        for (size_t i = 0; i < 2; ++i)
            if (!args[i].sort().is_bitvec())
                throw SortError("argument " + std::to_string(i + 1) +
                                " of 'concat' has sort " + args[i].sort().smtlib() +
                                ", expected a bit-vector");
        return app(Op::Concat,
                   Sort::bitvec(args[0].sort().bv_width() + args[1].sort().bv_width()),
                   args);
    }
    if (op == "extract")
        throw SortError("'extract' is an indexed operator; use mk_extract(hi, lo, t)");
    throw SortError("unknown operator '" + std::string(op) + "'");
}

inline Term mk_not(Term a) { return mk_term("not", {a}); }
inline Term mk_and(std::vector<Term> args) { return mk_term("and", std::move(args)); }
inline Term mk_or(std::vector<Term> args) { return mk_term("or", std::move(args)); }
inline Term mk_implies(Term a, Term b) { return mk_term("=>", {a, b}); }
inline Term mk_ite(Term c, Term t, Term e) { return mk_term("ite", {c, t, e}); }
inline Term mk_eq(Term a, Term b) { return mk_term("=", {a, b}); }

// ---------------------------------------------------------------------------
// Structural total order: (node kind rank, operator symbol, children...).
// Deterministic across runs; used to canonicalize commutative argument lists.

inline int term_compare(Term a, Term b) {
    if (a == b) return 0;
    auto rank = [](NodeKind k) {
        return k == NodeKind::Const ? 0 : k == NodeKind::Var ? 1 : 2;
    };
    if (rank(a.kind()) != rank(b.kind()))
        return rank(a.kind()) < rank(b.kind()) ? -1 : 1;
    switch (a.kind()) {
    case NodeKind::Const: {
        if (int c = compare(a.sort(), b.sort())) return c;
        if (a.sort().is_bool())
            return a.bool_value() == b.bool_value() ? 0 : (!a.bool_value() ? -1 : 1);
        if (a.num_value() != b.num_value())
            return a.num_value() < b.num_value() ? -1 : 1;
        return 0;
    }
    case NodeKind::Var: {
        if (int c = a.symbol().compare(b.symbol()))
            return c < 0 ? -1 : 1;
        return compare(a.sort(), b.sort());
    }
    case NodeKind::App: {
        std::string_view an = a.op() == Op::Uf ? std::string_view(a.symbol())
                                               : std::string_view(op_name(a.op()));
        std::string_view bn = b.op() == Op::Uf ? std::string_view(b.symbol())
                                               : std::string_view(op_name(b.op()));
        if (int c = an.compare(bn)) return c < 0 ? -1 : 1;
        if (a.extract_hi() != b.extract_hi())
            return a.extract_hi() < b.extract_hi() ? -1 : 1;
        if (a.extract_lo() != b.extract_lo())
            return a.extract_lo() < b.extract_lo() ? -1 : 1;
        if (a.arity() != b.arity()) return a.arity() < b.arity() ? -1 : 1;
        for (size_t i = 0; i < a.arity(); ++i)
            if (int c = term_compare(a.arg(i), b.arg(i))) return c;
        return compare(a.sort(), b.sort());
    }
    }
    return 0;
}

inline bool term_less(Term a, Term b) { return term_compare(a, b) < 0; }

// ---------------------------------------------------------------------------
// Free variables and uninterpreted function signatures.

struct UfSignature {
    std::string name;
    std::vector<Sort> arg_sorts;
    Sort ret = Sort::boolean();

    friend bool operator==(const UfSignature& a, const UfSignature& b) {
        return a.name == b.name && a.arg_sorts == b.arg_sorts && a.ret == b.ret;
    }
};

struct SymbolSet {
    std::vector<Term> vars;        // Var terms, sorted by (name, sort)
    std::vector<UfSignature> ufs;  // sorted by name
};

namespace detail {

inline void collect_symbols(Term t, std::unordered_set<const TermNode*>& seen,
                            SymbolSet& out) {
    if (!seen.insert(t.node()).second) return;
    if (t.is_var()) {
        out.vars.push_back(t);
        return;
    }
    if (t.is_app()) {
        if (t.op() == Op::Uf) {
            UfSignature sig;
            sig.name = t.symbol();
            for (size_t i = 0; i < t.arity(); ++i)
                sig.arg_sorts.push_back(t.arg(i).sort());
            sig.ret = t.sort();
            out.ufs.push_back(std::move(sig));
        }
        for (size_t i = 0; i < t.arity(); ++i)
            collect_symbols(t.arg(i), seen, out);
    }
}

} // namespace detail

/// All variables and uninterpreted functions reachable in the given terms,
/// deduplicated and sorted by name for deterministic iteration.
template <typename TermRange>
SymbolSet collect_symbols(const TermRange& terms) {
    SymbolSet out;
    std::unordered_set<const TermNode*> seen;
    for (Term t : terms) detail::collect_symbols(t, seen, out);
    std::sort(out.vars.begin(), out.vars.end(), [](Term a, Term b) {
        if (a.symbol() != b.symbol()) return a.symbol() < b.symbol();
        return a.sort() < b.sort();
    });
    out.vars.erase(std::unique(out.vars.begin(), out.vars.end()), out.vars.end());
    std::sort(out.ufs.begin(), out.ufs.end(),
              [](const UfSignature& a, const UfSignature& b) {
                  if (a.name != b.name) return a.name < b.name;
                  return a.arg_sorts.size() < b.arg_sorts.size();
              });
    out.ufs.erase(std::unique(out.ufs.begin(), out.ufs.end()), out.ufs.end());
    return out;
}

/// Exact set of Var nodes reachable in t, sorted by name.
inline std::vector<Term> free_vars(Term t) {
    return collect_symbols(std::vector<Term>{t}).vars;
}

} // namespace smtlog

template <>
struct std::hash<smtlog::Term> {
    size_t operator()(smtlog::Term t) const {
        return std::hash<const smtlog::TermNode*>{}(t.node());
    }
};
