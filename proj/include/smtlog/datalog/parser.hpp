#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smtlog/backend.hpp"
#include "smtlog/datalog/ast.hpp"
#include "smtlog/sexpr.hpp"

namespace smtlog::dl {

namespace detail {

// ---------------------------------------------------------------------------
// Embedded SMT-LIB terms: sorts are inferred bottom-up with an optional
// expected sort flowing down. Variable sorts are recorded program-wide so a
// name keeps one sort across all #smt blocks.

struct InferFail {
    std::string why;
};

class SmtTermParser {
public:
    SmtTermParser(std::map<std::string, Sort>& vars,
                  std::map<std::string, UfSignature>& funs,
                  bool allow_reserved = false)
        : vars_(vars), funs_(funs), allow_reserved_(allow_reserved) {}

    Term parse(const SExpr& e, std::optional<Sort> expected) {
        Term t = infer(e, expected);
        if (expected && t.sort() != *expected)
            throw InferFail{"term has sort " + t.sort().smtlib() + ", expected " +
                            expected->smtlib()};
        return t;
    }

private:
    Term infer(const SExpr& e, std::optional<Sort> expected) {
        if (e.is_atom) return infer_atom(e.atom, expected);

        if (e.items.empty()) throw InferFail{"empty application"};

        // ((_ extract hi lo) x)
        if (!e.items[0].is_atom) {
            const SExpr& h = e.items[0];
            if (h.items.size() == 4 && h.items[0].is_atom && h.items[0].atom == "_" &&
                h.items[1].is_atom && h.items[1].atom == "extract" &&
                e.items.size() == 2) {
                uint32_t hi = parse_index(h.items[2]);
                uint32_t lo = parse_index(h.items[3]);
                return mk_extract(hi, lo, infer(e.items[1], std::nullopt));
            }
            throw InferFail{"unsupported application head"};
        }

        const std::string& op = e.items[0].atom;
        std::vector<const SExpr*> args;
        for (size_t i = 1; i < e.items.size(); ++i) args.push_back(&e.items[i]);

        if (op == "not" || op == "and" || op == "or" || op == "=>") {
            std::vector<Term> ts;
            for (const SExpr* a : args) ts.push_back(infer(*a, Sort::boolean()));
            return mk_term(op, ts);
        }
        if (op == "ite") {
            if (args.size() != 3) throw InferFail{"ite expects 3 arguments"};
            Term c = infer(*args[0], Sort::boolean());
            auto [x, y] = infer_pair(*args[1], *args[2], expected);
            return mk_term("ite", {c, x, y});
        }
        if (op == "=" || op == "bvadd" || op == "bvsub" || op == "bvand" ||
            op == "bvor" || op == "bvult" || op == "bvule") {
            if (args.size() != 2) throw InferFail{"'" + op + "' expects 2 arguments"};
            std::optional<Sort> hint;
            if (op != "=" && op != "bvult" && op != "bvule") hint = expected;
            auto [x, y] = infer_pair(*args[0], *args[1], hint);
            return mk_term(op, {x, y});
        }
        if (op == "+" || op == "-" || op == "*" || op == "<" || op == "<=" ||
            op == ">" || op == ">=") {
            std::vector<Term> ts;
            for (const SExpr* a : args) ts.push_back(infer(*a, Sort::integer()));
            return mk_term(op, ts);
        }
        if (op == "concat") {
            if (args.size() != 2) throw InferFail{"concat expects 2 arguments"};
            return mk_term("concat", {infer(*args[0], std::nullopt),
                                      infer(*args[1], std::nullopt)});
        }

        // Uninterpreted function application: argument sorts must resolve on
        // their own; the result sort comes from context or a previous use.
        std::vector<Term> ts;
        for (const SExpr* a : args) ts.push_back(infer(*a, std::nullopt));
        Sort ret = Sort::boolean();
        auto it = funs_.find(op);
        if (it != funs_.end()) {
            ret = it->second.ret;
        } else if (expected) {
            ret = *expected;
        } else {
            throw InferFail{"cannot infer result sort of function '" + op + "'"};
        }
        Term t = mk_uf(op, ret, ts);
        UfSignature sig;
        sig.name = op;
        for (Term a : ts) sig.arg_sorts.push_back(a.sort());
        sig.ret = ret;
        if (it != funs_.end()) {
            if (!(it->second == sig))
                throw InferFail{"function '" + op +
                                "' used with two different signatures"};
        } else {
            funs_.emplace(op, std::move(sig));
        }
        return t;
    }

    // Infers two arguments that must share a sort; tries the left first and
    // falls back to right-then-left when the left alone is ambiguous.
    std::pair<Term, Term> infer_pair(const SExpr& a, const SExpr& b,
                                     std::optional<Sort> hint) {
        try {
            Term x = infer(a, hint);
            Term y = infer(b, x.sort());
            return {x, y};
        } catch (const InferFail&) {
            Term y = infer(b, hint);
            Term x = infer(a, y.sort());
            return {x, y};
        }
    }

    Term infer_atom(const std::string& a, std::optional<Sort> expected) {
        if (a == "true") return mk_true();
        if (a == "false") return mk_false();
        if (!a.empty() && (std::isdigit(static_cast<unsigned char>(a[0])) ||
                           (a.size() > 1 && a[0] == '-'))) {
            for (size_t i = (a[0] == '-' ? 1 : 0); i < a.size(); ++i)
                if (!std::isdigit(static_cast<unsigned char>(a[i])))
                    throw InferFail{"malformed numeral '" + a + "'"};
            return mk_int(BigInt(a));
        }
        if (a.size() > 2 && a[0] == '#' && (a[1] == 'b' || a[1] == 'x')) {
            BigInt bits = 0;
            uint32_t width = 0;
            if (a[1] == 'b') {
                for (size_t i = 2; i < a.size(); ++i) {
                    if (a[i] != '0' && a[i] != '1')
                        throw InferFail{"malformed binary literal '" + a + "'"};
                    bits = (bits << 1) | (a[i] == '1' ? 1 : 0);
                }
                width = static_cast<uint32_t>(a.size() - 2);
            } else {
                for (size_t i = 2; i < a.size(); ++i) {
                    int d = hex_digit(a[i]);
                    if (d < 0) throw InferFail{"malformed hex literal '" + a + "'"};
                    bits = (bits << 4) | d;
                }
                width = static_cast<uint32_t>((a.size() - 2) * 4);
            }
            return mk_bv(bits, width);
        }
        if (!is_simple_symbol(a)) throw InferFail{"invalid symbol '" + a + "'"};
        if (!allow_reserved_ && is_assumption_symbol(a))
            throw InferFail{"reserved prefix in SMT variable '" + a + "'"};
        auto it = vars_.find(a);
        if (it != vars_.end()) return mk_var(a, it->second);
        if (!expected)
            throw InferFail{"cannot infer sort of SMT variable '" + a + "'"};
        vars_.emplace(a, *expected);
        return mk_var(a, *expected);
    }

    static int hex_digit(char c) {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    }

    static uint32_t parse_index(const SExpr& e) {
        if (!e.is_atom) throw InferFail{"extract index must be a numeral"};
        for (char c : e.atom)
            if (!std::isdigit(static_cast<unsigned char>(c)))
                throw InferFail{"extract index must be a numeral"};
        return static_cast<uint32_t>(std::stoul(e.atom));
    }

    std::map<std::string, Sort>& vars_;
    std::map<std::string, UfSignature>& funs_;
    bool allow_reserved_;
};

// ---------------------------------------------------------------------------
// Tokenizer

struct Token {
    enum class Kind {
        Ident,  // lowercase-initial: relation, symbol constant, keyword
        Var,    // uppercase or '_' initial
        Int,
        Smt,    // #smt{...} raw payload
        LParen, RParen, Comma, Dot,
        Turnstile, // :-
        Assign,    // :=
        Neq,       // !=
        End,
    };
    Kind kind = Kind::End;
    std::string text;
    int64_t int_value = 0;
    int line = 1, col = 1;
};

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) {}

    Token next() {
        skip_ws();
        Token t;
        t.line = line_;
        t.col = col_;
        if (pos_ >= text_.size()) return t;
        char c = text_[pos_];
        if (c == '(') { advance(); t.kind = Token::Kind::LParen; return t; }
        if (c == ')') { advance(); t.kind = Token::Kind::RParen; return t; }
        if (c == ',') { advance(); t.kind = Token::Kind::Comma; return t; }
        if (c == '.') { advance(); t.kind = Token::Kind::Dot; return t; }
        if (c == ':') {
            advance();
            if (peek() == '-') { advance(); t.kind = Token::Kind::Turnstile; return t; }
            if (peek() == '=') { advance(); t.kind = Token::Kind::Assign; return t; }
            throw SyntaxError(t.line, t.col, "expected ':-' or ':='");
        }
        if (c == '!') {
            advance();
            if (peek() == '=') { advance(); t.kind = Token::Kind::Neq; return t; }
            throw SyntaxError(t.line, t.col, "expected '!='");
        }
        if (c == '#') {
            // #smt{ ... } with the payload taken verbatim up to the first '}'
            if (text_.substr(pos_).rfind("#smt{", 0) != 0)
                throw SyntaxError(t.line, t.col, "expected '#smt{'");
            for (int i = 0; i < 5; ++i) advance();
            size_t start = pos_;
            while (pos_ < text_.size() && text_[pos_] != '}') advance();
            if (pos_ >= text_.size())
                throw SyntaxError(t.line, t.col, "unterminated '#smt{' block");
            t.kind = Token::Kind::Smt;
            t.text = std::string(text_.substr(start, pos_ - start));
            advance(); // '}'
            return t;
        }
        if (c == '-' || std::isdigit(static_cast<unsigned char>(c))) {
            size_t start = pos_;
            if (c == '-') advance();
            if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
                throw SyntaxError(t.line, t.col, "malformed integer literal");
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                advance();
            t.kind = Token::Kind::Int;
            t.text = std::string(text_.substr(start, pos_ - start));
            try {
                t.int_value = std::stoll(t.text);
            } catch (...) {
                throw SyntaxError(t.line, t.col, "integer literal out of range");
            }
            return t;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                    text_[pos_] == '_'))
                advance();
            t.text = std::string(text_.substr(start, pos_ - start));
            t.kind = (std::isupper(static_cast<unsigned char>(c)) || c == '_')
                         ? Token::Kind::Var
                         : Token::Kind::Ident;
            return t;
        }
        throw SyntaxError(t.line, t.col, std::string("unexpected character '") + c + "'");
    }

private:
    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
    void advance() {
        if (pos_ < text_.size()) {
            if (text_[pos_] == '\n') {
                ++line_;
                col_ = 1;
            } else {
                ++col_;
            }
            ++pos_;
        }
    }
    void skip_ws() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == '%') {
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
            } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
                advance();
            } else {
                break;
            }
        }
    }

    std::string_view text_;
    size_t pos_ = 0;
    int line_ = 1, col_ = 1;
};

// ---------------------------------------------------------------------------
// Parser + validator

class ProgramParser {
public:
    explicit ProgramParser(std::string_view text) : lex_(text) { shift(); }

    Program run() {
        while (cur_.kind != Token::Kind::End) parse_item();
        return std::move(prog_);
    }

private:
    void shift() { cur_ = lex_.next(); }

    [[noreturn]] void fail(const std::string& msg) const {
        throw SyntaxError(cur_.line, cur_.col, msg);
    }

    void expect(Token::Kind k, const char* what) {
        if (cur_.kind != k) fail(std::string("expected ") + what);
        shift();
    }

    void parse_item() {
        if (cur_.kind == Token::Kind::Ident && cur_.text == "rel") {
            shift();
            parse_decl();
            return;
        }
        parse_rule_or_fact();
    }

    void parse_decl() {
        if (cur_.kind == Token::Kind::Var && is_assumption_symbol(cur_.text))
            throw ReservedNameError(cur_.line, cur_.col,
                                    "relation name '" + cur_.text +
                                        "' uses the reserved '__csa_' prefix");
        if (cur_.kind != Token::Kind::Ident) fail("expected relation name");
        Token name = cur_;
        if (is_assumption_symbol(name.text))
            throw ReservedNameError(name.line, name.col,
                                    "relation name '" + name.text +
                                        "' uses the reserved '__csa_' prefix");
        if (prog_.relation_ids.count(name.text))
            throw SyntaxError(name.line, name.col,
                              "relation '" + name.text + "' declared twice");
        shift();
        expect(Token::Kind::LParen, "'('");
        RelationDecl decl;
        decl.name = name.text;
        while (true) {
            if (cur_.kind != Token::Kind::Ident) fail("expected column type");
            if (cur_.text == "int") decl.cols.push_back(ColType::Int);
            else if (cur_.text == "sym") decl.cols.push_back(ColType::Sym);
            else if (cur_.text == "smt_bool") decl.cols.push_back(ColType::SmtBool);
            else if (cur_.text == "smt_list") decl.cols.push_back(ColType::SmtList);
            else fail("unknown column type '" + cur_.text + "'");
            shift();
            if (cur_.kind == Token::Kind::Comma) {
                shift();
                continue;
            }
            break;
        }
        expect(Token::Kind::RParen, "')'");
        expect(Token::Kind::Dot, "'.'");
        prog_.relation_ids.emplace(decl.name, static_cast<uint32_t>(prog_.relations.size()));
        prog_.relations.push_back(std::move(decl));
    }

    struct RuleScope {
        std::unordered_map<std::string, uint32_t> slots;
        std::vector<std::string> names;
        std::vector<std::optional<ColType>> types;
        std::vector<bool> bound;
    };

    uint32_t scope_var(RuleScope& sc, const Token& t) {
        auto it = sc.slots.find(t.text);
        if (it != sc.slots.end()) return it->second;
        uint32_t slot = static_cast<uint32_t>(sc.names.size());
        sc.slots.emplace(t.text, slot);
        sc.names.push_back(t.text);
        sc.types.emplace_back();
        sc.bound.push_back(false);
        return slot;
    }

    void parse_rule_or_fact() {
        RuleScope sc;
        Atom head = parse_atom(sc);
        if (cur_.kind == Token::Kind::Dot) {
            shift();
            add_fact(head, sc);
            return;
        }
        expect(Token::Kind::Turnstile, "':-' or '.'");
        Rule rule;
        rule.head = std::move(head);
        while (true) {
            rule.body.push_back(parse_literal(sc));
            if (cur_.kind == Token::Kind::Comma) {
                shift();
                continue;
            }
            break;
        }
        expect(Token::Kind::Dot, "'.'");
        finish_rule(std::move(rule), sc);
    }

    Atom parse_atom(RuleScope& sc) {
        if (cur_.kind != Token::Kind::Ident) fail("expected relation name");
        Token name = cur_;
        shift();
        auto rel = prog_.find_relation(name.text);
        if (!rel)
            throw UnknownRelation(name.line, name.col,
                                  "unknown relation '" + name.text + "'");
        Atom atom;
        atom.rel = *rel;
        atom.rel_name = name.text;
        atom.line = name.line;
        atom.col = name.col;
        expect(Token::Kind::LParen, "'('");
        while (true) {
            atom.args.push_back(parse_expr(sc));
            if (cur_.kind == Token::Kind::Comma) {
                shift();
                continue;
            }
            break;
        }
        expect(Token::Kind::RParen, "')'");
        size_t arity = prog_.relation(*rel).cols.size();
        if (atom.args.size() != arity)
            throw ArityError(name.line, name.col,
                             "relation '" + name.text + "' expects " +
                                 std::to_string(arity) + " argument(s), got " +
                                 std::to_string(atom.args.size()));
        return atom;
    }

    Expr parse_expr(RuleScope& sc) {
        Token t = cur_;
        switch (cur_.kind) {
        case Token::Kind::Int: {
            shift();
            Expr e = Expr::literal(Value::of_int(t.int_value));
            e.line = t.line; e.col = t.col;
            return e;
        }
        case Token::Kind::Var: {
            shift();
            Expr e = Expr::variable(scope_var(sc, t), t.text);
            e.line = t.line; e.col = t.col;
            return e;
        }
        case Token::Kind::Smt: {
            shift();
            Expr e = Expr::literal(Value::of_smt(parse_smt_block(t)));
            e.line = t.line; e.col = t.col;
            return e;
        }
        case Token::Kind::Ident: {
            if (t.text == "nil") {
                shift();
                Expr e = Expr::nil();
                e.line = t.line; e.col = t.col;
                return e;
            }
            if (t.text == "cons") {
                shift();
                expect(Token::Kind::LParen, "'('");
                Expr head = parse_expr(sc);
                expect(Token::Kind::Comma, "','");
                Expr tail = parse_expr(sc);
                expect(Token::Kind::RParen, "')'");
                Expr e = Expr::cons(std::move(head), std::move(tail));
                e.line = t.line; e.col = t.col;
                return e;
            }
            shift();
            Expr e = Expr::literal(Value::of_sym(t.text));
            e.line = t.line; e.col = t.col;
            return e;
        }
        default:
            fail("expected an argument expression");
        }
    }

    Conjunct parse_smt_block(const Token& t) {
        try {
            SExpr e = parse_sexpr(t.text);
            SmtTermParser p(prog_.smt_var_sorts, smt_funs_);
            Term term = p.parse(e, Sort::boolean());
            return canonicalize(term);
        } catch (const ProtocolError& e) {
            throw SyntaxError(t.line, t.col, std::string("bad SMT term: ") + e.what());
        } catch (const InferFail& f) {
            if (f.why.find("reserved prefix") != std::string::npos)
                throw ReservedNameError(t.line, t.col, f.why);
            throw SyntaxError(t.line, t.col, "bad SMT term: " + f.why);
        } catch (const SortError& e) {
            throw SyntaxError(t.line, t.col, std::string("bad SMT term: ") + e.what());
        }
    }

    Literal parse_literal(RuleScope& sc) {
        Literal lit;
        lit.line = cur_.line;
        lit.col = cur_.col;
        if (cur_.kind == Token::Kind::Ident && cur_.text == "is_sat") {
            shift();
            expect(Token::Kind::LParen, "'('");
            lit.kind = Literal::Kind::IsSat;
            lit.a = parse_expr(sc);
            expect(Token::Kind::RParen, "')'");
            return lit;
        }
        if (cur_.kind == Token::Kind::Var) {
            Token v = cur_;
            shift();
            if (cur_.kind == Token::Kind::Assign) {
                shift();
                lit.kind = Literal::Kind::Bind;
                lit.bind_var = scope_var(sc, v);
                lit.bind_name = v.text;
                lit.a = parse_expr(sc);
                return lit;
            }
            if (cur_.kind == Token::Kind::Neq) {
                shift();
                lit.kind = Literal::Kind::Neq;
                lit.a = Expr::variable(scope_var(sc, v), v.text);
                lit.a.line = v.line; lit.a.col = v.col;
                lit.b = parse_expr(sc);
                return lit;
            }
            fail("expected ':=' or '!=' after variable");
        }
        if (cur_.kind == Token::Kind::Int || cur_.kind == Token::Kind::Smt) {
            lit.kind = Literal::Kind::Neq;
            lit.a = parse_expr(sc);
            expect(Token::Kind::Neq, "'!='");
            lit.b = parse_expr(sc);
            return lit;
        }
        // Lowercase identifier: relation atom, or a symbol/cons expression
        // followed by '!='.
        if (cur_.kind == Token::Kind::Ident) {
            if (cur_.text == "cons" || cur_.text == "nil") {
                lit.kind = Literal::Kind::Neq;
                lit.a = parse_expr(sc);
                expect(Token::Kind::Neq, "'!='");
                lit.b = parse_expr(sc);
                return lit;
            }
            // Peek: relation atoms are IDENT '('; a bare symbol must be a '!='.
            Token name = cur_;
            shift();
            if (cur_.kind == Token::Kind::Neq) {
                shift();
                lit.kind = Literal::Kind::Neq;
                lit.a = Expr::literal(Value::of_sym(name.text));
                lit.a.line = name.line; lit.a.col = name.col;
                lit.b = parse_expr(sc);
                return lit;
            }
            if (cur_.kind != Token::Kind::LParen)
                fail("expected '(' (relation atom) or '!='");
            // Re-build the atom (we already consumed the name).
            auto rel = prog_.find_relation(name.text);
            if (!rel)
                throw UnknownRelation(name.line, name.col,
                                      "unknown relation '" + name.text + "'");
            Atom atom;
            atom.rel = *rel;
            atom.rel_name = name.text;
            atom.line = name.line;
            atom.col = name.col;
            shift(); // '('
            while (true) {
                atom.args.push_back(parse_expr(sc));
                if (cur_.kind == Token::Kind::Comma) {
                    shift();
                    continue;
                }
                break;
            }
            expect(Token::Kind::RParen, "')'");
            size_t arity = prog_.relation(*rel).cols.size();
            if (atom.args.size() != arity)
                throw ArityError(name.line, name.col,
                                 "relation '" + name.text + "' expects " +
                                     std::to_string(arity) + " argument(s), got " +
                                     std::to_string(atom.args.size()));
            lit.kind = Literal::Kind::Rel;
            lit.atom = std::move(atom);
            return lit;
        }
        fail("expected a body literal");
    }

    // -- validation ---------------------------------------------------------

    /// Unifies an expression with an expected column type, assigning variable
    /// types on first use.
    void type_expr(const Expr& e, ColType want, RuleScope& sc) {
        switch (e.kind) {
        case Expr::Kind::Lit: {
            ColType has = value_type(e.lit);
            if (has != want)
                throw SyntaxError(e.line, e.col,
                                  std::string("expected ") + col_type_name(want) +
                                      ", got " + col_type_name(has));
            return;
        }
        case Expr::Kind::Var: {
            auto& ty = sc.types[e.var];
            if (!ty) {
                ty = want;
            } else if (*ty != want) {
                throw SyntaxError(e.line, e.col,
                                  "variable '" + sc.names[e.var] + "' used as " +
                                      col_type_name(*ty) + " and " + col_type_name(want));
            }
            return;
        }
        case Expr::Kind::Nil:
            if (want != ColType::SmtList)
                throw SyntaxError(e.line, e.col, "'nil' is an smt_list");
            return;
        case Expr::Kind::Cons:
            if (want != ColType::SmtList)
                throw SyntaxError(e.line, e.col, "'cons' builds an smt_list");
            type_expr(e.kids[0], ColType::SmtBool, sc);
            type_expr(e.kids[1], ColType::SmtList, sc);
            return;
        }
    }

    static ColType value_type(const Value& v) {
        switch (v.kind()) {
        case Value::Kind::Int: return ColType::Int;
        case Value::Kind::Sym: return ColType::Sym;
        case Value::Kind::Smt: return ColType::SmtBool;
        case Value::Kind::List: return ColType::SmtList;
        }
        return ColType::Int;
    }

    /// Infers the type of a bind/is_sat argument expression from its shape.
    ColType rhs_type(const Expr& e, RuleScope& sc) {
        switch (e.kind) {
        case Expr::Kind::Lit: return value_type(e.lit);
        case Expr::Kind::Nil:
        case Expr::Kind::Cons: return ColType::SmtList;
        case Expr::Kind::Var: {
            if (!sc.types[e.var])
                throw SyntaxError(e.line, e.col,
                                  "variable '" + sc.names[e.var] +
                                      "' has no type yet at this point");
            return *sc.types[e.var];
        }
        }
        return ColType::Int;
    }

    void collect_vars(const Expr& e, std::vector<uint32_t>& out) const {
        if (e.kind == Expr::Kind::Var) out.push_back(e.var);
        for (const Expr& k : e.kids) collect_vars(k, out);
    }

    void require_bound(const Expr& e, const RuleScope& sc, const char* ctx) const {
        std::vector<uint32_t> vars;
        collect_vars(e, vars);
        for (uint32_t v : vars)
            if (!sc.bound[v])
                throw SyntaxError(e.line, e.col,
                                  std::string(ctx) + " uses unbound variable '" +
                                      sc.names[v] + "'");
    }

    void finish_rule(Rule rule, RuleScope& sc) {
        const RelationDecl& head_decl = prog_.relation(rule.head.rel);
        for (size_t i = 0; i < rule.head.args.size(); ++i)
            type_expr(rule.head.args[i], head_decl.cols[i], sc);

        for (Literal& lit : rule.body) {
            switch (lit.kind) {
            case Literal::Kind::Rel: {
                const RelationDecl& d = prog_.relation(lit.atom.rel);
                for (size_t i = 0; i < lit.atom.args.size(); ++i)
                    type_expr(lit.atom.args[i], d.cols[i], sc);
                std::vector<uint32_t> vars;
                for (const Expr& a : lit.atom.args) collect_vars(a, vars);
                for (uint32_t v : vars) sc.bound[v] = true;
                break;
            }
            case Literal::Kind::IsSat: {
                require_bound(lit.a, sc, "is_sat");
                ColType t = rhs_type(lit.a, sc);
                if (t != ColType::SmtList)
                    throw SyntaxError(lit.line, lit.col,
                                      "is_sat expects an smt_list expression");
                type_expr(lit.a, ColType::SmtList, sc);
                break;
            }
            case Literal::Kind::Bind: {
                require_bound(lit.a, sc, ":=");
                ColType t = rhs_type(lit.a, sc);
                if (t != ColType::SmtBool && t != ColType::SmtList)
                    throw SyntaxError(lit.line, lit.col,
                                      ":= builds SMT values (smt_bool or smt_list)");
                if (sc.bound[lit.bind_var])
                    throw SyntaxError(lit.line, lit.col,
                                      "variable '" + lit.bind_name +
                                          "' is already bound");
                auto& ty = sc.types[lit.bind_var];
                if (ty && *ty != t)
                    throw SyntaxError(lit.line, lit.col,
                                      "variable '" + lit.bind_name +
                                          "' used with conflicting types");
                ty = t;
                sc.bound[lit.bind_var] = true;
                break;
            }
            case Literal::Kind::Neq: {
                require_bound(lit.a, sc, "'!='");
                require_bound(lit.b, sc, "'!='");
                ColType ta = rhs_type(lit.a, sc), tb = rhs_type(lit.b, sc);
                if (ta != tb)
                    throw SyntaxError(lit.line, lit.col,
                                      "'!=' compares values of different types");
                if (ta != ColType::Int && ta != ColType::Sym)
                    throw SyntaxError(lit.line, lit.col,
                                      "'!=' compares ground values (int or sym)");
                break;
            }
            }
        }

        std::vector<uint32_t> head_vars;
        for (const Expr& a : rule.head.args) collect_vars(a, head_vars);
        for (uint32_t v : head_vars)
            if (!sc.bound[v])
                throw RangeRestrictionError(
                    rule.head.line, rule.head.col,
                    "head variable '" + sc.names[v] +
                        "' is not bound by a positive body atom");

        rule.var_count = static_cast<uint32_t>(sc.names.size());
        rule.var_names = sc.names;
        prog_.rules.push_back(std::move(rule));
    }

    void add_fact(const Atom& atom, RuleScope& sc) {
        const RelationDecl& decl = prog_.relation(atom.rel);
        Tuple t;
        for (size_t i = 0; i < atom.args.size(); ++i) {
            const Expr& e = atom.args[i];
            type_expr(e, decl.cols[i], sc);
            if (!expr_ground(e))
                throw SyntaxError(e.line, e.col, "facts must be ground");
            t.push_back(eval_ground(e));
        }
        prog_.facts.emplace_back(atom.rel, std::move(t));
    }

    bool expr_ground(const Expr& e) const {
        if (e.kind == Expr::Kind::Var) return false;
        for (const Expr& k : e.kids)
            if (!expr_ground(k)) return false;
        return true;
    }

    Value eval_ground(const Expr& e) const {
        switch (e.kind) {
        case Expr::Kind::Lit: return e.lit;
        case Expr::Kind::Nil: return Value::nil();
        case Expr::Kind::Cons: {
            Value head = eval_ground(e.kids[0]);
            Value tail = eval_ground(e.kids[1]);
            return Value::cons(head.as_smt(), tail);
        }
        case Expr::Kind::Var: break;
        }
        throw SyntaxError(e.line, e.col, "facts must be ground");
    }

    Lexer lex_;
    Token cur_;
    Program prog_;
    std::map<std::string, UfSignature> smt_funs_;
};

} // namespace detail

/// Parses and validates a program in the surface syntax. Diagnostics carry
/// line/col positions; see docs/grammar.md for the grammar.
inline Program parse_program(std::string_view text) {
    detail::ProgramParser p(text);
    return p.run();
}

} // namespace smtlog::dl
