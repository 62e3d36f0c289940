#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "clab/expr.hpp"

using namespace clab;
using namespace clab::expr;

namespace {

double ev(const std::string& src, std::initializer_list<double> xs, int d = -1) {
    const int dim = d < 0 ? int(xs.size()) : d;
    std::vector<double> x(xs);
    return eval(*parse(src, dim), x);
}

}  // namespace

TEST_CASE("precedence and associativity") {
    CHECK(ev("2+3*4^2-1", {0.0}, 1) == 49.0);
    CHECK(ev("2^3^2", {0.0}, 1) == 512.0);
    CHECK(ev("(2^3)^2", {0.0}, 1) == 64.0);
    CHECK(ev("6-2-1", {0.0}, 1) == 3.0);
    CHECK(ev("12/4/3", {0.0}, 1) == 1.0);
    CHECK(ev("-x1^2", {2.0}) == -4.0);
    CHECK(ev("(-x1)^2", {2.0}) == 4.0);
    CHECK(ev("2^-1", {0.0}, 1) == 0.5);
    CHECK(ev("x1-x1^3", {2.0}) == -6.0);
    CHECK(ev("norm(x)", {3.0, 4.0}) == 5.0);
    CHECK(ev("abs(-2.5)+sqrt(9)", {0.0}, 1) == 5.5);
    CHECK(ev("exp(log(7))", {0.0}, 1) == doctest::Approx(7.0).epsilon(1e-14));
    CHECK(ev("sin(0)+cos(0)", {0.0}, 1) == 1.0);
}

TEST_CASE("print/parse round-trip on fixed forms") {
    for (const char* src :
         {"x1", "-x1", "x1+x2*x3", "(x1+x2)*x3", "x1-(x2-x3)", "x1-x2-x3", "2^3^2",
          "(2^3)^2", "-x1^2", "(-x1)^2", "norm(x)^2", "exp(-0.5*norm(x)^2)",
          "x1/x2/x3", "x1/(x2/x3)", "1.5e-3*x1", "sqrt(abs(x1-x2))",
          "-(x1+x2)", "-(x1*x2)", "cos(sin(x1))^2"}) {
        auto a = parse(src, 3);
        auto b = parse(print(*a), 3);
        CAPTURE(src);
        CAPTURE(print(*a));
        CHECK(equal(*a, *b));
    }
}

namespace {

// Random AST generator for the round-trip fuzz (nonnegative literals; the
// parser never produces a negative number node).
NodePtr random_ast(std::uint64_t& state, int depth, int dim) {
    auto next = [&state]() {
        state = state * 6364136223846793005ull + 1442695040888963407ull;
        return std::uint32_t(state >> 33);
    };
    const std::uint32_t pick = next() % (depth <= 0 ? 3u : 10u);
    switch (pick) {
        case 0:
            return make_number(double(next() % 1000) / 64.0);
        case 1:
            return make_var(int(next() % std::uint32_t(dim)));
        case 2:
            return make_norm();
        case 3:
            return make_neg(random_ast(state, depth - 1, dim));
        case 4:
            return make_call(Func(next() % 6), random_ast(state, depth - 1, dim));
        default: {
            auto op = BinOp(next() % 5);
            auto lhs = random_ast(state, depth - 1, dim);
            auto rhs = random_ast(state, depth - 1, dim);
            return make_binary(op, lhs, rhs);
        }
    }
}

}  // namespace

TEST_CASE("print/parse round-trip fuzz preserves structure and values") {
    std::uint64_t state = 20260814;
    int evaluated = 0;
    for (int iter = 0; iter < 500; ++iter) {
        auto a = random_ast(state, 5, 3);
        const std::string text = print(*a);
        auto b = parse(text, 3);
        CAPTURE(text);
        REQUIRE(equal(*a, *b));

        const std::array<double, 3> x = {0.75, -1.25, double(iter % 7) / 3.0};
        double va = 0.0, vb = 0.0;
        bool ta = false, tb = false;
        try {
            va = eval(*a, x);
        } catch (const EvalError&) {
            ta = true;
        }
        try {
            vb = eval(*b, x);
        } catch (const EvalError&) {
            tb = true;
        }
        REQUIRE(ta == tb);
        if (!ta) {
            // identical trees evaluate through identical operations
            CHECK(std::memcmp(&va, &vb, sizeof va) == 0);
            ++evaluated;
        }
    }
    CHECK(evaluated > 50);
}

TEST_CASE("syntax errors carry byte offsets") {
    try {
        parse("x1 + * x2", 2);
        FAIL("expected SyntaxError");
    } catch (const SyntaxError& e) {
        CHECK(e.offset == 5);
    }
    try {
        parse("exp(x1", 2);
        FAIL("expected SyntaxError");
    } catch (const SyntaxError& e) {
        CHECK(e.offset == 6);
    }
    try {
        parse("x1 x2", 2);
        FAIL("expected SyntaxError");
    } catch (const SyntaxError& e) {
        CHECK(e.offset == 3);
        CHECK(e.expected == "end of input");
    }
    CHECK_THROWS_AS(parse("", 1), SyntaxError);
    CHECK_THROWS_AS(parse("()", 1), SyntaxError);
    CHECK_THROWS_AS(parse("norm(x1)", 2), SyntaxError);
}

TEST_CASE("unknown identifiers carry name and offset") {
    try {
        parse("x1 + foo", 2);
        FAIL("expected UnknownIdentifierError");
    } catch (const UnknownIdentifierError& e) {
        CHECK(e.offset == 5);
        CHECK(e.name == "foo");
    }
    // coordinate out of range for the declared dimension
    CHECK_THROWS_AS(parse("x3", 2), UnknownIdentifierError);
    CHECK_THROWS_AS(parse("x0", 2), UnknownIdentifierError);
    CHECK_THROWS_AS(parse("x", 2), UnknownIdentifierError);
    CHECK_NOTHROW(parse("x2", 2));
}

TEST_CASE("component lists and arity") {
    auto comps = parse_list("-x1, -x2", 2, 2);
    CHECK(comps.size() == 2);
    CHECK_THROWS_AS(parse_list("-x1", 2, 2), ArityMismatchError);
    CHECK_THROWS_AS(parse_list("-x1, -x2, 0", 2, 2), ArityMismatchError);
}

TEST_CASE("evaluation is total: domain violations raise, never NaN") {
    CHECK_THROWS_AS(ev("log(0-1)", {0.0}, 1), EvalError);
    CHECK_THROWS_AS(ev("log(0)", {0.0}, 1), EvalError);
    CHECK_THROWS_AS(ev("sqrt(0-4)", {0.0}, 1), EvalError);
    CHECK_THROWS_AS(ev("1/x1", {0.0}), EvalError);
    CHECK_THROWS_AS(ev("(0-2)^0.5", {0.0}, 1), EvalError);
    CHECK_THROWS_AS(ev("0^(0-1)", {0.0}, 1), EvalError);
    CHECK_THROWS_AS(ev("exp(1000)", {0.0}, 1), EvalError);
    CHECK(ev("(0-2)^3", {0.0}, 1) == -8.0);
    CHECK(ev("0^0", {0.0}, 1) == 1.0);
}

TEST_CASE("number printing survives the round trip exactly") {
    for (double v : {0.1, 1.0 / 3.0, 6.02e23, 5e-324, 1.7976931348623157e308, 0.0}) {
        auto n = make_number(v);
        auto r = parse(print(*n), 1);
        CHECK(equal(*n, *r));
    }
}
