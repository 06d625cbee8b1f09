#pragma once

#include <unordered_map>
#include <variant>

#include "smtlog/term.hpp"

namespace smtlog {

struct BvValue {
    uint32_t width = 1;
    BigInt bits; // invariant: 0 <= bits < 2^width

    friend bool operator==(const BvValue& a, const BvValue& b) {
        return a.width == b.width && a.bits == b.bits;
    }
};

/// A ground constant: Bool, Int, or bit-vector.
using ConstValue = std::variant<bool, BigInt, BvValue>;

/// Variable assignment keyed by interned Var terms.
using Assignment = std::unordered_map<Term, ConstValue, TermHash>;

namespace detail {

inline BigInt bv_mask(uint32_t width) { return (BigInt(1) << width) - 1; }

} // namespace detail

/// Evaluates a term under a total assignment of its free variables, with
/// standard SMT-LIB semantics. Throws UnsupportedFragment for uninterpreted
/// functions, uninterpreted-sort variables, or unbound variables.
inline ConstValue eval_term(Term t, const Assignment& a) {
    switch (t.kind()) {
    case NodeKind::Const:
        if (t.sort().is_bool()) return t.bool_value();
        if (t.sort().is_int()) return t.num_value();
        return BvValue{t.sort().bv_width(), t.num_value()};
    case NodeKind::Var: {
        auto it = a.find(t);
        if (it == a.end())
            throw UnsupportedFragment("unbound variable '" + t.symbol() +
                                      "' during evaluation");
        return it->second;
    }
    case NodeKind::App:
        break;
    }

    auto as_bool = [&](size_t i) { return std::get<bool>(eval_term(t.arg(i), a)); };
    auto as_int = [&](size_t i) { return std::get<BigInt>(eval_term(t.arg(i), a)); };
    auto as_bv = [&](size_t i) { return std::get<BvValue>(eval_term(t.arg(i), a)); };

    switch (t.op()) {
    case Op::Not:
        return !as_bool(0);
    case Op::And: {
        for (size_t i = 0; i < t.arity(); ++i)
            if (!as_bool(i)) return false;
        return true;
    }
    case Op::Or: {
        for (size_t i = 0; i < t.arity(); ++i)
            if (as_bool(i)) return true;
        return false;
    }
    case Op::Implies:
        return !as_bool(0) || as_bool(1);
    case Op::Ite:
        return as_bool(0) ? eval_term(t.arg(1), a) : eval_term(t.arg(2), a);
    case Op::Eq:
        return eval_term(t.arg(0), a) == eval_term(t.arg(1), a);
    case Op::Add: {
        BigInt s = 0;
        for (size_t i = 0; i < t.arity(); ++i) s += as_int(i);
        return s;
    }
    case Op::Sub: {
        if (t.arity() == 1) return BigInt(-as_int(0));
        BigInt s = as_int(0);
        for (size_t i = 1; i < t.arity(); ++i) s -= as_int(i);
        return s;
    }
    case Op::Mul: {
        BigInt s = 1;
        for (size_t i = 0; i < t.arity(); ++i) s *= as_int(i);
        return s;
    }
    case Op::Lt: return as_int(0) < as_int(1);
    case Op::Le: return as_int(0) <= as_int(1);
    case Op::Gt: return as_int(0) > as_int(1);
    case Op::Ge: return as_int(0) >= as_int(1);
    case Op::BvAdd: {
        BvValue x = as_bv(0), y = as_bv(1);
        return BvValue{x.width, (x.bits + y.bits) & detail::bv_mask(x.width)};
    }
    case Op::BvSub: {
        BvValue x = as_bv(0), y = as_bv(1);
        return BvValue{x.width,
                       (x.bits - y.bits + (BigInt(1) << x.width)) &
                           detail::bv_mask(x.width)};
    }
    case Op::BvAnd: {
        BvValue x = as_bv(0), y = as_bv(1);
        return BvValue{x.width, x.bits & y.bits};
    }
    case Op::BvOr: {
        BvValue x = as_bv(0), y = as_bv(1);
        return BvValue{x.width, x.bits | y.bits};
    }
    case Op::BvUlt: return as_bv(0).bits < as_bv(1).bits;
    case Op::BvUle: return as_bv(0).bits <= as_bv(1).bits;
    case Op::Concat: {
        BvValue x = as_bv(0), y = as_bv(1);
        return BvValue{x.width + y.width, (x.bits << y.width) | y.bits};
    }
    case Op::Extract: {
        BvValue x = as_bv(0);
        uint32_t w = t.extract_hi() - t.extract_lo() + 1;
        return BvValue{w, (x.bits >> t.extract_lo()) & detail::bv_mask(w)};
    }
    case Op::Uf:
        throw UnsupportedFragment("cannot evaluate uninterpreted function '" +
                                  t.symbol() + "'");
    }
    throw UnsupportedFragment("unreachable operator in eval_term");
}

inline bool eval_bool(Term t, const Assignment& a) {
    return std::get<bool>(eval_term(t, a));
}

} // namespace smtlog
