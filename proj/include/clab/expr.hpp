#ifndef CLAB_EXPR_HPP
#define CLAB_EXPR_HPP

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clab/errors.hpp"

namespace clab::expr {

// Scalar expressions over coordinates x1..xd with +,-,*,/,^, unary minus,
// exp, log, sin, cos, sqrt, abs, and norm(x) (Euclidean norm of the full
// state). No conditionals; evaluation is pure and allocation-free.

enum class BinOp { add, sub, mul, div, pow };
enum class Func { exp, log, sin, cos, sqrt, abs };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    enum class Kind { number, var, norm, neg, call, binary } kind;
    double value = 0.0;  // number
    int var_index = 0;   // var, 0-based
    Func func = Func::exp;
    BinOp op = BinOp::add;
    NodePtr lhs, rhs;  // neg/call use lhs only
};

NodePtr make_number(double v);
NodePtr make_var(int index);
NodePtr make_norm();
NodePtr make_neg(NodePtr a);
NodePtr make_call(Func f, NodePtr a);
NodePtr make_binary(BinOp op, NodePtr a, NodePtr b);

// Parses a single expression; identifiers beyond x1..xd raise
// UnknownIdentifierError, malformed input raises SyntaxError, both with the
// byte offset into `src`.
NodePtr parse(std::string_view src, int dimension);

// Parses a comma-separated list of expressions (vector-field source form).
// `expected_count` < 0 skips the arity check.
std::vector<NodePtr> parse_list(std::string_view src, int dimension, int expected_count = -1);

// Canonical text form; parse(print(e)) reproduces the identical tree.
std::string print(const Node& e);

// Structural equality (numbers compared bitwise).
bool equal(const Node& a, const Node& b);

// Total evaluation: domain violations (log of non-positive, fractional power
// of a negative, division by zero, non-finite result) raise EvalError.
double eval(const Node& e, std::span<const double> x);

}  // namespace clab::expr

#endif
