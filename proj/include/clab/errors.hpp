#ifndef CLAB_ERRORS_HPP
#define CLAB_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace clab {

// Base class for every error thrown by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- expression / model -------------------------------------------------

struct SyntaxError : Error {
    std::size_t offset;
    std::string expected;
    SyntaxError(std::size_t off, std::string what_expected)
        : Error("syntax error at byte " + std::to_string(off) + ": expected " + what_expected),
          offset(off),
          expected(std::move(what_expected)) {}
};

struct UnknownIdentifierError : Error {
    std::size_t offset;
    std::string name;
    UnknownIdentifierError(std::size_t off, std::string ident)
        : Error("unknown identifier '" + ident + "' at byte " + std::to_string(off)),
          offset(off),
          name(std::move(ident)) {}
};

struct ArityMismatchError : Error {
    using Error::Error;
};

struct EvalError : Error {
    using Error::Error;
};

struct NonFiniteError : Error {
    using Error::Error;
};

// ---- linear algebra / coupling ------------------------------------------

struct DimensionMismatchError : Error {
    using Error::Error;
};

struct EigenvalueViolationError : Error {
    using Error::Error;
};

struct CoincidentPointsError : Error {
    using Error::Error;
};

// ---- optimal transport ---------------------------------------------------

struct SizeMismatchError : Error {
    using Error::Error;
};

struct TooLargeError : Error {
    using Error::Error;
};

struct BracketFailureError : Error {
    using Error::Error;
};

struct InvalidYoungFunctionError : Error {
    using Error::Error;
};

// ---- theory ---------------------------------------------------------------

struct NoValidR0Error : Error {
    using Error::Error;
};

struct NonPositiveRateError : Error {
    using Error::Error;
};

struct DivergentTailError : Error {
    using Error::Error;
};

// ---- harness ---------------------------------------------------------------

struct InsufficientDecayError : Error {
    using Error::Error;
};

struct StencilError : Error {
    using Error::Error;
};

// ---- cli / config ----------------------------------------------------------

// Carries a JSON pointer to the offending config node.
struct ConfigError : Error {
    std::string pointer;
    ConfigError(std::string json_pointer, const std::string& detail)
        : Error("config error at " + json_pointer + ": " + detail),
          pointer(std::move(json_pointer)) {}
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace clab

#endif
