#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

#include "smtlog/errors.hpp"

namespace smtlog {

/// True iff `s` is a valid SMT-LIB 2.6 simple symbol: a nonempty run of
/// letters, digits and ~ ! @ $ % ^ & * _ - + = < > . ? / that does not start
/// with a digit.
inline bool is_simple_symbol(std::string_view s) {
    if (s.empty()) return false;
    auto ok = [](char c) {
        if (c >= 'a' && c <= 'z') return true;
        if (c >= 'A' && c <= 'Z') return true;
        if (c >= '0' && c <= '9') return true;
        for (char p : {'~', '!', '@', '$', '%', '^', '&', '*', '_', '-', '+',
                       '=', '<', '>', '.', '?', '/'})
            if (c == p) return true;
        return false;
    };
    if (s[0] >= '0' && s[0] <= '9') return false;
    for (char c : s)
        if (!ok(c)) return false;
    return true;
}

class Sort {
public:
    enum class Kind : uint8_t { Bool, Int, BitVec, Uninterpreted };

    static Sort boolean() { return Sort(Kind::Bool, 0, {}); }
    static Sort integer() { return Sort(Kind::Int, 0, {}); }
    static Sort bitvec(uint32_t width) {
        if (width < 1) throw SortError("bit-vector width must be >= 1");
        return Sort(Kind::BitVec, width, {});
    }
    static Sort uninterpreted(std::string name) {
        if (!is_simple_symbol(name))
            throw SortError("uninterpreted sort name '" + name +
                            "' is not a valid SMT-LIB simple symbol");
        return Sort(Kind::Uninterpreted, 0, std::move(name));
    }

    Kind kind() const { return kind_; }
    bool is_bool() const { return kind_ == Kind::Bool; }
    bool is_int() const { return kind_ == Kind::Int; }
    bool is_bitvec() const { return kind_ == Kind::BitVec; }
    bool is_uninterpreted() const { return kind_ == Kind::Uninterpreted; }
    uint32_t bv_width() const { return width_; }
    const std::string& name() const { return name_; }

    friend bool operator==(const Sort& a, const Sort& b) {
        return a.kind_ == b.kind_ && a.width_ == b.width_ && a.name_ == b.name_;
    }
    friend bool operator!=(const Sort& a, const Sort& b) { return !(a == b); }

    /// Total order: kind rank, then width, then name.
    friend int compare(const Sort& a, const Sort& b) {
        if (a.kind_ != b.kind_)
            return static_cast<int>(a.kind_) < static_cast<int>(b.kind_) ? -1 : 1;
        if (a.width_ != b.width_) return a.width_ < b.width_ ? -1 : 1;
        return a.name_.compare(b.name_) < 0 ? -1 : (a.name_ == b.name_ ? 0 : 1);
    }
    friend bool operator<(const Sort& a, const Sort& b) { return compare(a, b) < 0; }

    /// SMT-LIB concrete syntax for the sort.
    std::string smtlib() const {
        switch (kind_) {
        case Kind::Bool: return "Bool";
        case Kind::Int: return "Int";
        case Kind::BitVec: return "(_ BitVec " + std::to_string(width_) + ")";
        case Kind::Uninterpreted: return name_;
        }
        return {};
    }

    size_t hash() const {
        size_t h = static_cast<size_t>(kind_) * 0x9e3779b97f4a7c15ull;
        h ^= width_ + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        h ^= std::hash<std::string>{}(name_) + (h << 6) + (h >> 2);
        return h;
    }

private:
    Sort(Kind k, uint32_t w, std::string n)
        : kind_(k), width_(w), name_(std::move(n)) {}

    Kind kind_;
    uint32_t width_;
    std::string name_; // Uninterpreted only
};

} // namespace smtlog

template <>
struct std::hash<smtlog::Sort> {
    size_t operator()(const smtlog::Sort& s) const { return s.hash(); }
};
