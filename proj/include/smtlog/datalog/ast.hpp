#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "smtlog/canonical.hpp"
#include "smtlog/smtlib.hpp"

namespace smtlog::dl {

// ---------------------------------------------------------------------------
// Ground values: int, symbol, embedded SMT conjunct, list of conjuncts.

namespace detail {

class SymTable {
public:
    static SymTable& instance() {
        static SymTable t;
        return t;
    }
    uint32_t intern(std::string_view s) {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = ids_.find(std::string(s));
        if (it != ids_.end()) return it->second;
        uint32_t id = static_cast<uint32_t>(names_.size());
        names_.emplace_back(s);
        ids_.emplace(names_.back(), id);
        return id;
    }
    const std::string& name(uint32_t id) {
        std::lock_guard<std::mutex> lock(mu_);
        return names_[id];
    }

private:
    std::mutex mu_;
    std::deque<std::string> names_;
    std::map<std::string, uint32_t, std::less<>> ids_;
};

} // namespace detail

/// Interned cons cell of a conjunct list; nullptr is nil. Interning makes
/// list equality a pointer comparison, mirroring term interning.
struct ListNode {
    Conjunct head;
    const ListNode* tail;
    uint32_t length;
};

namespace detail {

class ListTable {
public:
    static ListTable& instance() {
        static ListTable t;
        return t;
    }
    const ListNode* cons(Conjunct head, const ListNode* tail) {
        std::lock_guard<std::mutex> lock(mu_);
        auto key = std::make_pair(head.term().node(), tail);
        auto it = map_.find(key);
        if (it != map_.end()) return it->second;
        nodes_.push_back(ListNode{head, tail, tail ? tail->length + 1 : 1});
        const ListNode* stored = &nodes_.back();
        map_.emplace(key, stored);
        return stored;
    }

private:
    struct KeyHash {
        size_t operator()(const std::pair<const TermNode*, const ListNode*>& k) const {
            return std::hash<const void*>{}(k.first) * 31 ^
                   std::hash<const void*>{}(k.second);
        }
    };
    std::mutex mu_;
    std::deque<ListNode> nodes_;
    std::unordered_map<std::pair<const TermNode*, const ListNode*>, const ListNode*,
                       KeyHash>
        map_;
};

} // namespace detail

class Value {
public:
    enum class Kind : uint8_t { Int, Sym, Smt, List };

    Value() : kind_(Kind::Int), int_(0) {}

    static Value of_int(int64_t v) {
        Value x;
        x.kind_ = Kind::Int;
        x.int_ = v;
        return x;
    }
    static Value of_sym(std::string_view s) {
        Value x;
        x.kind_ = Kind::Sym;
        x.int_ = detail::SymTable::instance().intern(s);
        return x;
    }
    static Value of_smt(Conjunct c) {
        Value x;
        x.kind_ = Kind::Smt;
        x.smt_ = c;
        return x;
    }
    static Value nil() {
        Value x;
        x.kind_ = Kind::List;
        x.list_ = nullptr;
        return x;
    }
    static Value cons(Conjunct head, const Value& tail) {
        Value x;
        x.kind_ = Kind::List;
        x.list_ = detail::ListTable::instance().cons(head, tail.as_list());
        return x;
    }
    static Value of_list(const ListNode* n) {
        Value x;
        x.kind_ = Kind::List;
        x.list_ = n;
        return x;
    }

    Kind kind() const { return kind_; }
    int64_t as_int() const { return int_; }
    uint32_t sym_id() const { return static_cast<uint32_t>(int_); }
    const std::string& sym() const {
        return detail::SymTable::instance().name(sym_id());
    }
    Conjunct as_smt() const { return *smt_; }
    const ListNode* as_list() const { return list_; }
    uint32_t list_length() const { return list_ ? list_->length : 0; }

    friend bool operator==(const Value& a, const Value& b) {
        if (a.kind_ != b.kind_) return false;
        switch (a.kind_) {
        case Kind::Int:
        case Kind::Sym: return a.int_ == b.int_;
        case Kind::Smt: return a.smt_ == b.smt_;
        case Kind::List: return a.list_ == b.list_;
        }
        return false;
    }
    friend bool operator!=(const Value& a, const Value& b) { return !(a == b); }

    size_t hash() const {
        size_t h = static_cast<size_t>(kind_) * 0x9e3779b97f4a7c15ull;
        switch (kind_) {
        case Kind::Int:
        case Kind::Sym: return h ^ std::hash<int64_t>{}(int_);
        case Kind::Smt: return h ^ std::hash<const void*>{}(smt_->term().node());
        case Kind::List: return h ^ std::hash<const void*>{}(list_);
        }
        return h;
    }

private:
    Kind kind_;
    int64_t int_ = 0; // Int value or Sym id
    std::optional<Conjunct> smt_;
    const ListNode* list_ = nullptr;
};

/// Structural total order on values; stable across runs (no pointer or
/// intern-id comparisons). Used for deterministic dumps and set comparisons.
inline int value_compare(const Value& a, const Value& b) {
    if (a.kind() != b.kind())
        return static_cast<int>(a.kind()) < static_cast<int>(b.kind()) ? -1 : 1;
    switch (a.kind()) {
    case Value::Kind::Int:
        return a.as_int() == b.as_int() ? 0 : (a.as_int() < b.as_int() ? -1 : 1);
    case Value::Kind::Sym: {
        int c = a.sym().compare(b.sym());
        return c < 0 ? -1 : (c == 0 ? 0 : 1);
    }
    case Value::Kind::Smt:
        return term_compare(a.as_smt().term(), b.as_smt().term());
    case Value::Kind::List: {
        const ListNode *x = a.as_list(), *y = b.as_list();
        while (x && y) {
            if (x == y) return 0;
            if (int c = term_compare(x->head.term(), y->head.term())) return c;
            x = x->tail;
            y = y->tail;
        }
        return x == y ? 0 : (x == nullptr ? -1 : 1);
    }
    }
    return 0;
}

using Tuple = std::vector<Value>;

struct TupleHash {
    size_t operator()(const Tuple& t) const {
        size_t h = t.size();
        for (const Value& v : t)
            h ^= v.hash() + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        return h;
    }
};

inline bool tuple_less(const Tuple& a, const Tuple& b) {
    size_t n = std::min(a.size(), b.size());
    for (size_t i = 0; i < n; ++i)
        if (int c = value_compare(a[i], b[i])) return c < 0;
    return a.size() < b.size();
}

struct TupleLess {
    bool operator()(const Tuple& a, const Tuple& b) const { return tuple_less(a, b); }
};

// ---------------------------------------------------------------------------
// Program representation

enum class ColType : uint8_t { Int, Sym, SmtBool, SmtList };

inline const char* col_type_name(ColType t) {
    switch (t) {
    case ColType::Int: return "int";
    case ColType::Sym: return "sym";
    case ColType::SmtBool: return "smt_bool";
    case ColType::SmtList: return "smt_list";
    }
    return "?";
}

struct Expr {
    enum class Kind : uint8_t { Lit, Var, Cons, Nil };

    Kind kind = Kind::Nil;
    Value lit;               // Lit
    uint32_t var = 0;        // Var slot within the rule
    std::string var_name;    // diagnostics
    std::vector<Expr> kids;  // Cons: [head, tail]
    int line = 0, col = 0;

    static Expr literal(Value v) {
        Expr e;
        e.kind = Kind::Lit;
        e.lit = std::move(v);
        return e;
    }
    static Expr variable(uint32_t slot, std::string name) {
        Expr e;
        e.kind = Kind::Var;
        e.var = slot;
        e.var_name = std::move(name);
        return e;
    }
    static Expr cons(Expr head, Expr tail) {
        Expr e;
        e.kind = Kind::Cons;
        e.kids.push_back(std::move(head));
        e.kids.push_back(std::move(tail));
        return e;
    }
    static Expr nil() { return Expr{}; }
};

struct Atom {
    uint32_t rel = 0;
    std::string rel_name;
    std::vector<Expr> args;
    int line = 0, col = 0;
};

struct Literal {
    enum class Kind : uint8_t { Rel, IsSat, Bind, Neq };

    Kind kind = Kind::Rel;
    Atom atom;            // Rel
    Expr a;               // IsSat argument / Bind rhs / Neq lhs
    Expr b;               // Neq rhs
    uint32_t bind_var = 0;
    std::string bind_name;
    int line = 0, col = 0;
};

struct Rule {
    Atom head;
    std::vector<Literal> body;
    uint32_t var_count = 0;
    std::vector<std::string> var_names;
};

struct RelationDecl {
    std::string name;
    std::vector<ColType> cols;
};

struct Program {
    std::vector<RelationDecl> relations;
    std::unordered_map<std::string, uint32_t> relation_ids;
    std::vector<Rule> rules;
    std::vector<std::pair<uint32_t, Tuple>> facts; // in source order
    std::map<std::string, Sort> smt_var_sorts;     // inferred, program-wide

    const RelationDecl& relation(uint32_t id) const { return relations[id]; }
    std::optional<uint32_t> find_relation(std::string_view name) const {
        auto it = relation_ids.find(std::string(name));
        if (it == relation_ids.end()) return std::nullopt;
        return it->second;
    }
};

/// Conjuncts of a list value, oldest first (reverse cons order). This is the
/// order queries are presented to the solver: a list grown by consing one
/// label per step yields its construction order, so consecutive DFS queries
/// share prefixes.
inline std::vector<Conjunct> list_to_query(const Value& list) {
    std::vector<Conjunct> out;
    for (const ListNode* n = list.as_list(); n; n = n->tail)
        out.push_back(n->head);
    std::reverse(out.begin(), out.end());
    return out;
}

/// Renders a value in surface syntax (round-trips through the parser).
inline std::string value_to_string(const Value& v) {
    switch (v.kind()) {
    case Value::Kind::Int: return std::to_string(v.as_int());
    case Value::Kind::Sym: return v.sym();
    case Value::Kind::Smt: return "#smt{" + serialize_term(v.as_smt().term()) + "}";
    case Value::Kind::List: {
        std::string out;
        size_t depth = 0;
        for (const ListNode* n = v.as_list(); n; n = n->tail, ++depth)
            out += "cons(#smt{" + serialize_term(n->head.term()) + "}, ";
        out += "nil";
        out.append(depth, ')');
        return out;
    }
    }
    return "?";
}

inline std::string tuple_to_string(const std::string& rel, const Tuple& t) {
    std::string out = rel + "(";
    for (size_t i = 0; i < t.size(); ++i) {
        if (i) out += ", ";
        out += value_to_string(t[i]);
    }
    out += ").";
    return out;
}

} // namespace smtlog::dl
