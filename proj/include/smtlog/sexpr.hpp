#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "smtlog/errors.hpp"

namespace smtlog {

/// Minimal s-expression tree for parsing solver responses and embedded
/// SMT-LIB terms. An atom keeps its literal spelling, with string literals
/// retaining their surrounding quotes so callers can tell `"sat"` from sat.
struct SExpr {
    bool is_atom = true;
    std::string atom;
    std::vector<SExpr> items;

    static SExpr make_atom(std::string a) {
        SExpr e;
        e.atom = std::move(a);
        return e;
    }
    static SExpr make_list(std::vector<SExpr> xs) {
        SExpr e;
        e.is_atom = false;
        e.items = std::move(xs);
        return e;
    }
};

namespace detail {

struct SexprReader {
    std::string_view text;
    size_t pos = 0;

    bool at_end() {
        skip_ws();
        return pos >= text.size();
    }

    void skip_ws() {
        while (pos < text.size()) {
            char c = text[pos];
            if (c == ';') { // comment to end of line
                while (pos < text.size() && text[pos] != '\n') ++pos;
            } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
                ++pos;
            } else {
                break;
            }
        }
    }

    SExpr read() {
        skip_ws();
        if (pos >= text.size())
            throw ProtocolError("unexpected end of s-expression input");
        char c = text[pos];
        if (c == '(') {
            ++pos;
            std::vector<SExpr> items;
            while (true) {
                skip_ws();
                if (pos >= text.size())
                    throw ProtocolError("unbalanced parentheses in s-expression",
                                        std::string(text));
                if (text[pos] == ')') {
                    ++pos;
                    return SExpr::make_list(std::move(items));
                }
                items.push_back(read());
            }
        }
        if (c == ')')
            throw ProtocolError("unbalanced ')' in s-expression", std::string(text));
        if (c == '"') {
            size_t start = pos++;
            while (pos < text.size()) {
                if (text[pos] == '"') {
                    // SMT-LIB escapes a quote by doubling it.
                    if (pos + 1 < text.size() && text[pos + 1] == '"') {
                        pos += 2;
                        continue;
                    }
                    ++pos;
                    return SExpr::make_atom(std::string(text.substr(start, pos - start)));
                }
                ++pos;
            }
            throw ProtocolError("unterminated string literal", std::string(text));
        }
        if (c == '|') {
            size_t start = pos++;
            while (pos < text.size() && text[pos] != '|') ++pos;
            if (pos >= text.size())
                throw ProtocolError("unterminated quoted symbol", std::string(text));
            ++pos;
            return SExpr::make_atom(std::string(text.substr(start, pos - start)));
        }
        size_t start = pos;
        while (pos < text.size()) {
            char d = text[pos];
            if (d == '(' || d == ')' || d == ' ' || d == '\t' || d == '\n' ||
                d == '\r' || d == ';' || d == '"')
                break;
            ++pos;
        }
        return SExpr::make_atom(std::string(text.substr(start, pos - start)));
    }
};

} // namespace detail

/// Parses exactly one s-expression; trailing content is an error.
inline SExpr parse_sexpr(std::string_view text) {
    detail::SexprReader r{text};
    SExpr e = r.read();
    if (!r.at_end())
        throw ProtocolError("trailing content after s-expression", std::string(text));
    return e;
}

/// Parses zero or more top-level s-expressions.
inline std::vector<SExpr> parse_sexprs(std::string_view text) {
    detail::SexprReader r{text};
    std::vector<SExpr> out;
    while (!r.at_end()) out.push_back(r.read());
    return out;
}

} // namespace smtlog
