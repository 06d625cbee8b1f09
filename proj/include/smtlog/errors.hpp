#pragma once

#include <stdexcept>
#include <string>

namespace smtlog {

/// Base class for all smtlog errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Operator arity or sort mismatch during term construction, or an invalid
/// symbol/sort parameter.
class SortError : public Error {
public:
    using Error::Error;
};

/// The same symbol was declared (or inferred) with two different sorts.
class SortClash : public Error {
public:
    using Error::Error;
};

/// Unexpected or unparseable text on the solver wire, including
/// `(error ...)` responses.
class ProtocolError : public Error {
public:
    explicit ProtocolError(const std::string& msg, std::string solver_text = {})
        : Error(msg), solver_text_(std::move(solver_text)) {}
    const std::string& solver_text() const { return solver_text_; }

private:
    std::string solver_text_;
};

/// The solver executable could not be started.
class SpawnError : public Error {
public:
    using Error::Error;
};

/// The solver rejected the opening command sequence (typically set-logic).
class HandshakeError : public Error {
public:
    using Error::Error;
};

/// The solver process died (EOF/EPIPE) and could not be recovered.
class SolverCrash : public Error {
public:
    using Error::Error;
};

/// A term falls outside the fragment the brute-force reference backend can
/// decide (uninterpreted functions/sorts, wide bit-vectors, oversized search
/// spaces).
class UnsupportedFragment : public Error {
public:
    using Error::Error;
};

// Datalog front-end diagnostics. All carry a "line:col: message" text.
class ParseError : public Error {
public:
    ParseError(int line, int col, const std::string& msg)
        : Error(std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
          line_(line), col_(col) {}
    int line() const { return line_; }
    int col() const { return col_; }

private:
    int line_, col_;
};

class SyntaxError : public ParseError {
public:
    using ParseError::ParseError;
};

class ArityError : public ParseError {
public:
    using ParseError::ParseError;
};

class UnknownRelation : public ParseError {
public:
    using ParseError::ParseError;
};

class RangeRestrictionError : public ParseError {
public:
    using ParseError::ParseError;
};

class ReservedNameError : public ParseError {
public:
    using ParseError::ParseError;
};

/// Evaluation-time failure in the Datalog engine.
class EvalError : public Error {
public:
    using Error::Error;
};

/// The configurable tuple budget was exhausted before a fixpoint.
class BudgetExceeded : public EvalError {
public:
    using EvalError::EvalError;
};

/// Two benchmark cells derived different feasible-path sets.
class SoundnessError : public Error {
public:
    using Error::Error;
};

/// An impossible graph specification (e.g. more edges than node pairs).
class SpecError : public Error {
public:
    using Error::Error;
};

} // namespace smtlog
