#include "clab/expr.hpp"

#include <charconv>
#include <cmath>
#include <cstring>

namespace clab::expr {

NodePtr make_number(double v) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::number;
    n->value = v;
    return n;
}
NodePtr make_var(int index) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::var;
    n->var_index = index;
    return n;
}
NodePtr make_norm() {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::norm;
    return n;
}
NodePtr make_neg(NodePtr a) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::neg;
    n->lhs = std::move(a);
    return n;
}
NodePtr make_call(Func f, NodePtr a) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::call;
    n->func = f;
    n->lhs = std::move(a);
    return n;
}
NodePtr make_binary(BinOp op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::binary;
    n->op = op;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return n;
}

// ---- parser -----------------------------------------------------------------

namespace {

struct Parser {
    std::string_view src;
    std::size_t pos = 0;
    int dim;

    void skip_ws() {
        while (pos < src.size() && (src[pos] == ' ' || src[pos] == '\t' || src[pos] == '\n' ||
                                    src[pos] == '\r'))
            ++pos;
    }

    bool at_end() {
        skip_ws();
        return pos >= src.size();
    }

    char peek() {
        skip_ws();
        return pos < src.size() ? src[pos] : '\0';
    }

    bool accept(char c) {
        skip_ws();
        if (pos < src.size() && src[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    void expect(char c, const char* what) {
        if (!accept(c)) throw SyntaxError(pos, what);
    }

    NodePtr parse_expr() {
        NodePtr lhs = parse_term();
        for (;;) {
            if (accept('+'))
                lhs = make_binary(BinOp::add, lhs, parse_term());
            else if (accept('-'))
                lhs = make_binary(BinOp::sub, lhs, parse_term());
            else
                return lhs;
        }
    }

    NodePtr parse_term() {
        NodePtr lhs = parse_factor();
        for (;;) {
            if (accept('*'))
                lhs = make_binary(BinOp::mul, lhs, parse_factor());
            else if (accept('/'))
                lhs = make_binary(BinOp::div, lhs, parse_factor());
            else
                return lhs;
        }
    }

    // Unary minus binds looser than '^': -x^2 is -(x^2).
    NodePtr parse_factor() {
        if (accept('-')) return make_neg(parse_factor());
        if (accept('+')) return parse_factor();
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_atom();
        if (accept('^')) return make_binary(BinOp::pow, base, parse_factor());
        return base;
    }

    NodePtr parse_atom() {
        skip_ws();
        if (pos >= src.size()) throw SyntaxError(pos, "an operand");
        const char c = src[pos];
        if (c == '(') {
            ++pos;
            NodePtr inner = parse_expr();
            expect(')', "')'");
            return inner;
        }
        if ((c >= '0' && c <= '9') || c == '.') return parse_number();
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_')
            return parse_identifier();
        throw SyntaxError(pos, "an operand");
    }

    NodePtr parse_number() {
        double value = 0.0;
        const char* begin = src.data() + pos;
        const char* end = src.data() + src.size();
        auto [ptr, ec] = std::from_chars(begin, end, value);
        if (ec != std::errc{}) throw SyntaxError(pos, "a numeric literal");
        pos += std::size_t(ptr - begin);
        return make_number(value);
    }

    NodePtr parse_identifier() {
        const std::size_t start = pos;
        while (pos < src.size() &&
               ((src[pos] >= 'a' && src[pos] <= 'z') || (src[pos] >= 'A' && src[pos] <= 'Z') ||
                (src[pos] >= '0' && src[pos] <= '9') || src[pos] == '_'))
            ++pos;
        const std::string_view name = src.substr(start, pos - start);

        if (name == "norm") {
            expect('(', "'(' after norm");
            skip_ws();
            const std::size_t arg_at = pos;
            if (pos < src.size() && src[pos] == 'x' &&
                (pos + 1 >= src.size() || !isalnum_(src[pos + 1]))) {
                ++pos;
            } else {
                throw SyntaxError(arg_at, "'x' (norm takes the full state)");
            }
            expect(')', "')'");
            return make_norm();
        }

        static constexpr struct {
            const char* name;
            Func f;
        } kFuncs[] = {{"exp", Func::exp}, {"log", Func::log},   {"sin", Func::sin},
                      {"cos", Func::cos}, {"sqrt", Func::sqrt}, {"abs", Func::abs}};
        for (const auto& fn : kFuncs) {
            if (name == fn.name) {
                expect('(', "'(' after function name");
                NodePtr arg = parse_expr();
                expect(')', "')'");
                return make_call(fn.f, arg);
            }
        }

        if (name.size() >= 2 && name[0] == 'x') {
            int idx = 0;
            auto [ptr, ec] =
                std::from_chars(name.data() + 1, name.data() + name.size(), idx);
            if (ec == std::errc{} && ptr == name.data() + name.size() && idx >= 1) {
                if (idx > dim)
                    throw UnknownIdentifierError(start, std::string(name));
                return make_var(idx - 1);
            }
        }
        throw UnknownIdentifierError(start, std::string(name));
    }

    static bool isalnum_(char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
               c == '_';
    }
};

}  // namespace

NodePtr parse(std::string_view src, int dimension) {
    Parser p{src, 0, dimension};
    NodePtr e = p.parse_expr();
    if (!p.at_end()) throw SyntaxError(p.pos, "end of input");
    return e;
}

std::vector<NodePtr> parse_list(std::string_view src, int dimension, int expected_count) {
    Parser p{src, 0, dimension};
    std::vector<NodePtr> out;
    out.push_back(p.parse_expr());
    while (p.accept(',')) out.push_back(p.parse_expr());
    if (!p.at_end()) throw SyntaxError(p.pos, "',' or end of input");
    if (expected_count >= 0 && int(out.size()) != expected_count)
        throw ArityMismatchError("expected " + std::to_string(expected_count) +
                                 " component expressions, found " + std::to_string(out.size()));
    return out;
}

// ---- printer ----------------------------------------------------------------

namespace {

int precedence(const Node& e) {
    switch (e.kind) {
        case Node::Kind::binary:
            switch (e.op) {
                case BinOp::add:
                case BinOp::sub:
                    return 1;
                case BinOp::mul:
                case BinOp::div:
                    return 2;
                case BinOp::pow:
                    return 4;
            }
            return 0;
        case Node::Kind::neg:
            return 3;
        default:
            return 5;
    }
}

void print_rec(const Node& e, std::string& out);

void print_child(const Node& child, int min_prec, std::string& out) {
    if (precedence(child) < min_prec) {
        out += '(';
        print_rec(child, out);
        out += ')';
    } else {
        print_rec(child, out);
    }
}

void print_rec(const Node& e, std::string& out) {
    switch (e.kind) {
        case Node::Kind::number: {
            char buf[32];
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, e.value);
            out.append(buf, ptr);
            return;
        }
        case Node::Kind::var:
            out += 'x';
            out += std::to_string(e.var_index + 1);
            return;
        case Node::Kind::norm:
            out += "norm(x)";
            return;
        case Node::Kind::neg:
            out += '-';
            print_child(*e.lhs, 3, out);
            return;
        case Node::Kind::call: {
            static constexpr const char* kNames[] = {"exp", "log", "sin", "cos", "sqrt", "abs"};
            out += kNames[int(e.func)];
            out += '(';
            print_rec(*e.lhs, out);
            out += ')';
            return;
        }
        case Node::Kind::binary: {
            const int prec = precedence(e);
            static constexpr const char* kOps[] = {"+", "-", "*", "/", "^"};
            if (e.op == BinOp::pow) {
                // Right-associative: parenthesize a left child of equal or
                // lower precedence, keep chains on the right bare.
                print_child(*e.lhs, 5, out);
                out += '^';
                print_child(*e.rhs, 3, out);
            } else {
                print_child(*e.lhs, prec, out);
                out += kOps[int(e.op)];
                // Equal-precedence right children stay parenthesized so the
                // reparse rebuilds the identical (left-leaning) tree.
                print_child(*e.rhs, prec + 1, out);
            }
            return;
        }
    }
}

}  // namespace

std::string print(const Node& e) {
    std::string out;
    print_rec(e, out);
    return out;
}

bool equal(const Node& a, const Node& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case Node::Kind::number:
            return std::memcmp(&a.value, &b.value, sizeof(double)) == 0;
        case Node::Kind::var:
            return a.var_index == b.var_index;
        case Node::Kind::norm:
            return true;
        case Node::Kind::neg:
            return equal(*a.lhs, *b.lhs);
        case Node::Kind::call:
            return a.func == b.func && equal(*a.lhs, *b.lhs);
        case Node::Kind::binary:
            return a.op == b.op && equal(*a.lhs, *b.lhs) && equal(*a.rhs, *b.rhs);
    }
    return false;
}

// ---- evaluation ---------------------------------------------------------------

namespace {

double finite_or_throw(double v, const char* what) {
    if (!std::isfinite(v)) throw EvalError(std::string("non-finite result from ") + what);
    return v;
}

}  // namespace

double eval(const Node& e, std::span<const double> x) {
    switch (e.kind) {
        case Node::Kind::number:
            return e.value;
        case Node::Kind::var:
            if (e.var_index >= int(x.size()))
                throw EvalError("state dimension smaller than variable index");
            return x[std::size_t(e.var_index)];
        case Node::Kind::norm: {
            double s = 0.0;
            for (double xi : x) s += xi * xi;
            return finite_or_throw(std::sqrt(s), "norm");
        }
        case Node::Kind::neg:
            return -eval(*e.lhs, x);
        case Node::Kind::call: {
            const double a = eval(*e.lhs, x);
            switch (e.func) {
                case Func::exp:
                    return finite_or_throw(std::exp(a), "exp");
                case Func::log:
                    if (a <= 0.0) throw EvalError("log of a non-positive value");
                    return finite_or_throw(std::log(a), "log");
                case Func::sin:
                    return std::sin(a);
                case Func::cos:
                    return std::cos(a);
                case Func::sqrt:
                    if (a < 0.0) throw EvalError("sqrt of a negative value");
                    return std::sqrt(a);
                case Func::abs:
                    return std::fabs(a);
            }
            throw EvalError("unknown function");
        }
        case Node::Kind::binary: {
            const double a = eval(*e.lhs, x);
            const double b = eval(*e.rhs, x);
            switch (e.op) {
                case BinOp::add:
                    return finite_or_throw(a + b, "addition");
                case BinOp::sub:
                    return finite_or_throw(a - b, "subtraction");
                case BinOp::mul:
                    return finite_or_throw(a * b, "multiplication");
                case BinOp::div:
                    if (b == 0.0) throw EvalError("division by zero");
                    return finite_or_throw(a / b, "division");
                case BinOp::pow: {
                    if (a == 0.0 && b < 0.0) throw EvalError("zero raised to a negative power");
                    if (a < 0.0 && b != std::floor(b))
                        throw EvalError("fractional power of a negative value");
                    return finite_or_throw(std::pow(a, b), "power");
                }
            }
            throw EvalError("unknown operator");
        }
    }
    throw EvalError("malformed expression node");
}

}  // namespace clab::expr
