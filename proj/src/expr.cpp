#include "exitfem/expr.hpp"

#include "exitfem/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace exitfem {

EvaluationError::EvaluationError(const std::string& message, std::vector<double> point)
    : Error(message + " at " + format_point(point)), point_(std::move(point)) {}

std::string format_point(const std::vector<double>& point) {
    std::string out = "(";
    for (std::size_t i = 0; i < point.size(); ++i) {
        if (i) out += ", ";
        char buf[32];
        const auto res = std::to_chars(buf, buf + sizeof buf, point[i]);
        out.append(buf, res.ptr);
    }
    return out + ')';
}

struct Expression::Node {
    Kind kind = Kind::Literal;
    double value = 0.0;
    std::size_t index = 0;
    unsigned exponent = 0;
    std::size_t arity = 0;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make_node(Expression::Kind kind, NodePtr lhs, NodePtr rhs = nullptr, unsigned exponent = 0) {
    auto n = std::make_shared<Expression::Node>();
    n->kind = kind;
    n->exponent = exponent;
    n->arity = std::max(lhs ? lhs->arity : 0, rhs ? rhs->arity : 0);
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
}

double ipow(double base, unsigned exponent) {
    double result = 1.0;
    for (unsigned i = 0; i < exponent; ++i) result *= base;
    return result;
}

double eval_node(const Expression::Node& n, std::span<const double> point) {
    switch (n.kind) {
        case Expression::Kind::Literal: return n.value;
        case Expression::Kind::Variable: return point[n.index];
        case Expression::Kind::Add: return eval_node(*n.lhs, point) + eval_node(*n.rhs, point);
        case Expression::Kind::Sub: return eval_node(*n.lhs, point) - eval_node(*n.rhs, point);
        case Expression::Kind::Mul: return eval_node(*n.lhs, point) * eval_node(*n.rhs, point);
        case Expression::Kind::Div: {
            const double num = eval_node(*n.lhs, point);
            const double den = eval_node(*n.rhs, point);
            if (den == 0.0) {
                throw EvaluationError("division by zero",
                                      std::vector<double>(point.begin(), point.end()));
            }
            return num / den;
        }
        case Expression::Kind::Neg: return -eval_node(*n.lhs, point);
        case Expression::Kind::Pow: return ipow(eval_node(*n.lhs, point), n.exponent);
    }
    return 0.0;
}

}  // namespace

Expression::Expression() : Expression(literal(0.0)) {}

Expression Expression::literal(double value) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Literal;
    n->value = value;
    return Expression(std::move(n));
}

Expression Expression::variable(std::size_t index) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Variable;
    n->index = index;
    n->arity = index + 1;
    return Expression(std::move(n));
}

Expression::Kind Expression::kind() const noexcept { return node_->kind; }
bool Expression::is_literal(double v) const noexcept { return is_literal() && node_->value == v; }
double Expression::value() const noexcept { return node_->value; }
std::size_t Expression::index() const noexcept { return node_->index; }
unsigned Expression::exponent() const noexcept { return node_->exponent; }
Expression Expression::lhs() const { return Expression(node_->lhs); }
Expression Expression::rhs() const { return Expression(node_->rhs); }
std::size_t Expression::arity() const noexcept { return node_->arity; }

double Expression::evaluate(std::span<const double> point) const {
    if (point.size() < arity()) {
        throw ConfigError("expression needs " + std::to_string(arity()) +
                          " coordinates, got " + std::to_string(point.size()));
    }
    return eval_node(*node_, point);
}

Expression operator+(const Expression& a, const Expression& b) {
    if (a.is_literal() && b.is_literal()) return Expression::literal(a.value() + b.value());
    if (a.is_literal(0.0)) return b;
    if (b.is_literal(0.0)) return a;
    return Expression(make_node(Expression::Kind::Add, a.node_, b.node_));
}

Expression operator-(const Expression& a, const Expression& b) {
    if (a.is_literal() && b.is_literal()) return Expression::literal(a.value() - b.value());
    if (b.is_literal(0.0)) return a;
    if (a.is_literal(0.0)) return -b;
    return Expression(make_node(Expression::Kind::Sub, a.node_, b.node_));
}

Expression operator*(const Expression& a, const Expression& b) {
    if (a.is_literal() && b.is_literal()) return Expression::literal(a.value() * b.value());
    if (a.is_literal(0.0) || b.is_literal(0.0)) return Expression::literal(0.0);
    if (a.is_literal(1.0)) return b;
    if (b.is_literal(1.0)) return a;
    return Expression(make_node(Expression::Kind::Mul, a.node_, b.node_));
}

Expression operator/(const Expression& a, const Expression& b) {
    // A literal zero divisor is kept so that evaluation reports it.
    if (a.is_literal() && b.is_literal() && b.value() != 0.0) {
        return Expression::literal(a.value() / b.value());
    }
    if (b.is_literal(1.0)) return a;
    return Expression(make_node(Expression::Kind::Div, a.node_, b.node_));
}

Expression operator-(const Expression& a) {
    if (a.is_literal()) return Expression::literal(-a.value());
    if (a.kind() == Expression::Kind::Neg) return a.lhs();
    return Expression(make_node(Expression::Kind::Neg, a.node_));
}

Expression pow(const Expression& base, unsigned exponent) {
    if (exponent == 0) return Expression::literal(1.0);
    if (exponent == 1) return base;
    if (base.is_literal()) return Expression::literal(ipow(base.value(), exponent));
    return Expression(make_node(Expression::Kind::Pow, base.node_, nullptr, exponent));
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
public:
    Parser(std::string_view src, std::span<const std::string> vars, const ParameterMap& params)
        : src_(src), vars_(vars), params_(params) {}

    Expression run() {
        skip_ws();
        if (pos_ == src_.size()) throw ParseError("empty expression", pos_);
        Expression e = sum();
        skip_ws();
        if (pos_ != src_.size()) {
            throw ParseError(std::string("unexpected character '") + src_[pos_] + "'", pos_);
        }
        return e;
    }

private:
    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Expression sum() {
        Expression e = product();
        for (;;) {
            if (accept('+')) e = e + product();
            else if (accept('-')) e = e - product();
            else return e;
        }
    }

    Expression product() {
        Expression e = unary();
        for (;;) {
            if (accept('*')) e = e * unary();
            else if (accept('/')) e = e / unary();
            else return e;
        }
    }

    Expression unary() {
        if (accept('-')) return -unary();
        if (accept('+')) return unary();
        return power();
    }

    Expression power() {
        Expression e = primary();
        while (accept('^')) {
            skip_ws();
            const std::size_t start = pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            if (start == pos_) {
                throw ParseError("exponent must be a nonnegative integer literal", start);
            }
            if (pos_ < src_.size() && (src_[pos_] == '.' || src_[pos_] == 'e' || src_[pos_] == 'E')) {
                throw ParseError("exponent must be a nonnegative integer literal", start);
            }
            unsigned n = 0;
            auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, n);
            if (ec != std::errc{}) throw ParseError("exponent out of range", start);
            e = exitfem::pow(e, n);
        }
        return e;
    }

    Expression primary() {
        skip_ws();
        if (pos_ == src_.size()) throw ParseError("unexpected end of expression", pos_);
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            Expression e = sum();
            if (!accept(')')) throw ParseError("expected ')'", pos_);
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

    Expression number() {
        const std::size_t start = pos_;
        auto digits = [&] {
            const std::size_t s = pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            return pos_ - s;
        };
        std::size_t n = digits();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            n += digits();
        }
        if (n == 0) throw ParseError("malformed number", start);
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (digits() == 0) throw ParseError("malformed exponent in number", start);
        }
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, v);
        if (ec != std::errc{} || ptr != src_.data() + pos_) throw ParseError("malformed number", start);
        return Expression::literal(v);
    }

    Expression identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
            ++pos_;
        }
        const std::string_view name = src_.substr(start, pos_ - start);
        for (std::size_t i = 0; i < vars_.size(); ++i) {
            if (vars_[i] == name) return Expression::variable(i);
        }
        if (auto it = params_.find(name); it != params_.end()) return Expression::literal(it->second);
        throw ParseError("unknown identifier \"" + std::string(name) + "\"", start);
    }

    std::string_view src_;
    std::span<const std::string> vars_;
    const ParameterMap& params_;
    std::size_t pos_ = 0;
};

}  // namespace

Expression parse(std::string_view source, std::span<const std::string> variables,
                 const ParameterMap& parameters) {
    return Parser(source, variables, parameters).run();
}

// ---------------------------------------------------------------------------
// Differentiation

Expression differentiate(const Expression& e, std::size_t index) {
    using K = Expression::Kind;
    switch (e.kind()) {
        case K::Literal: return Expression::literal(0.0);
        case K::Variable: return Expression::literal(e.index() == index ? 1.0 : 0.0);
        case K::Add: return differentiate(e.lhs(), index) + differentiate(e.rhs(), index);
        case K::Sub: return differentiate(e.lhs(), index) - differentiate(e.rhs(), index);
        case K::Mul: {
            const Expression a = e.lhs(), b = e.rhs();
            return differentiate(a, index) * b + a * differentiate(b, index);
        }
        case K::Div: {
            const Expression a = e.lhs(), b = e.rhs();
            const Expression da = differentiate(a, index);
            const Expression db = differentiate(b, index);
            if (db.is_literal(0.0)) return da.is_literal(0.0) ? da : da / b;
            return (da * b - a * db) / pow(b, 2);
        }
        case K::Neg: return -differentiate(e.lhs(), index);
        case K::Pow: {
            const Expression base = e.lhs();
            const unsigned n = e.exponent();
            return Expression::literal(static_cast<double>(n)) * pow(base, n - 1) *
                   differentiate(base, index);
        }
    }
    return Expression::literal(0.0);
}

Expression differentiate(const Expression& expr, std::span<const std::string> variables,
                         std::string_view variable) {
    auto it = std::find(variables.begin(), variables.end(), variable);
    if (it == variables.end()) {
        throw ConfigError("unknown variable \"" + std::string(variable) + "\"");
    }
    return differentiate(expr, static_cast<std::size_t>(it - variables.begin()));
}

// ---------------------------------------------------------------------------
// Printing

namespace {

int precedence(const Expression& e) {
    using K = Expression::Kind;
    switch (e.kind()) {
        case K::Add:
        case K::Sub: return 1;
        case K::Mul:
        case K::Div: return 2;
        case K::Neg: return 3;
        case K::Pow: return 4;
        case K::Literal: return e.value() < 0.0 || std::signbit(e.value()) ? 0 : 5;
        case K::Variable: return 5;
    }
    return 5;
}

void print(std::string& out, const Expression& e, std::span<const std::string> vars);

void print_wrapped(std::string& out, const Expression& e, std::span<const std::string> vars,
                   bool wrap) {
    if (wrap) out += '(';
    print(out, e, vars);
    if (wrap) out += ')';
}

void print(std::string& out, const Expression& e, std::span<const std::string> vars) {
    using K = Expression::Kind;
    const int p = precedence(e);
    switch (e.kind()) {
        case K::Literal: {
            // Shortest representation that reads back to the same double.
            char buf[32];
            const auto res = std::to_chars(buf, buf + sizeof buf, e.value());
            out.append(buf, res.ptr);
            return;
        }
        case K::Variable:
            if (e.index() < vars.size()) out += vars[e.index()];
            else out += "x" + std::to_string(e.index());
            return;
        case K::Add:
            if (e.rhs().kind() == K::Neg) {
                // a + -b and a - b round identically.
                print_wrapped(out, e.lhs(), vars, precedence(e.lhs()) < p);
                out += " - ";
                print_wrapped(out, e.rhs().lhs(), vars, precedence(e.rhs().lhs()) <= p);
                return;
            }
            [[fallthrough]];
        case K::Sub:
        case K::Mul:
        case K::Div: {
            static constexpr const char* ops[] = {" + ", " - ", "*", "/"};
            const char* op = ops[static_cast<int>(e.kind()) - static_cast<int>(K::Add)];
            // Right operands of equal precedence are wrapped so that the
            // reparsed tree has the same evaluation order.
            print_wrapped(out, e.lhs(), vars, precedence(e.lhs()) < p);
            out += op;
            print_wrapped(out, e.rhs(), vars, precedence(e.rhs()) <= p);
            return;
        }
        case K::Neg:
            out += '-';
            print_wrapped(out, e.lhs(), vars, precedence(e.lhs()) < p);
            return;
        case K::Pow:
            print_wrapped(out, e.lhs(), vars, precedence(e.lhs()) <= p);
            out += '^';
            out += std::to_string(e.exponent());
            return;
    }
}

}  // namespace

std::string to_string(const Expression& expr, std::span<const std::string> variables) {
    std::string out;
    print(out, expr, variables);
    return out;
}

}  // namespace exitfem
