#pragma once

#include <algorithm>
#include <unordered_map>
#include <vector>

#include "smtlog/term.hpp"

namespace smtlog {

class Conjunct;
Conjunct canonicalize(Term t);

/// A Bool-sorted term in canonical form. Two conjuncts are equal iff their
/// canonical terms are the same interned node, which makes Conjunct a stable
/// key for caches and the CSA conjunct->variable map. Only canonicalize()
/// creates these.
class Conjunct {
public:
    Term term() const { return term_; }
    uint64_t id() const { return term_.id(); }

    friend bool operator==(Conjunct a, Conjunct b) { return a.term_ == b.term_; }
    friend bool operator!=(Conjunct a, Conjunct b) { return a.term_ != b.term_; }
    friend bool operator<(Conjunct a, Conjunct b) {
        return term_less(a.term_, b.term_);
    }

private:
    friend Conjunct canonicalize(Term);
    explicit Conjunct(Term t) : term_(t) {}
    Term term_;
};

struct ConjunctHash {
    size_t operator()(Conjunct c) const { return TermHash{}(c.term()); }
};

namespace detail {

inline Term canon_rec(Term t, std::unordered_map<const TermNode*, Term>& memo) {
    if (!t.is_app()) return t;
    auto it = memo.find(t.node());
    if (it != memo.end()) return it->second;

    std::vector<Term> cargs;
    cargs.reserve(t.arity());
    for (size_t i = 0; i < t.arity(); ++i)
        cargs.push_back(canon_rec(t.arg(i), memo));

    Term result = t;
    if (t.op() == Op::Not && cargs[0].is_app() && cargs[0].op() == Op::Not) {
        result = cargs[0].arg(0); // double negation
    } else if (t.op() == Op::And || t.op() == Op::Or) {
        // Flatten nested applications of the same operator, sort, dedup.
        std::vector<Term> flat;
        for (Term a : cargs) {
            if (a.is_app() && a.op() == t.op())
                for (size_t i = 0; i < a.arity(); ++i) flat.push_back(a.arg(i));
            else
                flat.push_back(a);
        }
        std::sort(flat.begin(), flat.end(), term_less);
        flat.erase(std::unique(flat.begin(), flat.end()), flat.end());
        result = flat.size() == 1 ? flat[0]
                                  : detail::app(t.op(), t.sort(), std::move(flat));
    } else {
        if (op_commutative(t.op()))
            std::sort(cargs.begin(), cargs.end(), term_less);
        result = detail::app(t.op(), t.sort(), std::move(cargs), t.symbol(),
                             t.extract_hi(), t.extract_lo());
    }
    memo.emplace(t.node(), result);
    return result;
}

} // namespace detail

/// Canonical form of a Bool-sorted term: nested and/or flattened, commutative
/// argument lists sorted by the structural term order, duplicate and/or
/// arguments removed, double negation rewritten. Logically equivalent to the
/// input and idempotent. No arithmetic or constant simplification happens
/// here; canonical form exists purely for key stability.
inline Conjunct canonicalize(Term t) {
    if (!t.sort().is_bool())
        throw SortError("canonicalize expects a Bool-sorted term, got sort " +
                        t.sort().smtlib());
    std::unordered_map<const TermNode*, Term> memo;
    return Conjunct(detail::canon_rec(t, memo));
}

} // namespace smtlog

template <>
struct std::hash<smtlog::Conjunct> {
    size_t operator()(smtlog::Conjunct c) const {
        return smtlog::ConjunctHash{}(c);
    }
};
