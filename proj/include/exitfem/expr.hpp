#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace exitfem {

/// Immutable arithmetic expression over an ordered list of state variables.
///
/// Nodes are literals, variable references, + - * /, unary negation and
/// integer powers. Parameters never appear: they are replaced by literals
/// when the source is parsed. Copies share the underlying tree, so passing
/// expressions by value is cheap and evaluation is safe from many threads.
class Expression {
public:
    enum class Kind { Literal, Variable, Add, Sub, Mul, Div, Neg, Pow };

    struct Node;

    /// The constant 0.
    Expression();

    static Expression literal(double value);
    static Expression variable(std::size_t index);

    Kind kind() const noexcept;
    bool is_literal() const noexcept { return kind() == Kind::Literal; }
    bool is_literal(double value) const noexcept;
    /// Literal value; only meaningful when `is_literal()`.
    double value() const noexcept;
    /// Variable index; only meaningful for `Kind::Variable`.
    std::size_t index() const noexcept;
    /// Exponent; only meaningful for `Kind::Pow`.
    unsigned exponent() const noexcept;
    /// Operands (lhs for unary / power nodes).
    Expression lhs() const;
    Expression rhs() const;

    /// Largest variable index referenced plus one (0 for constants).
    std::size_t arity() const noexcept;

    /// Throws EvaluationError on division by zero.
    double evaluate(std::span<const double> point) const;

    bool same_node(const Expression& other) const noexcept { return node_ == other.node_; }

    // Folding constructors: literal operands are combined and the identities
    // 0+e, e-0, 0*e, 1*e, e/1, e^0, e^1 are applied.
    friend Expression operator+(const Expression& a, const Expression& b);
    friend Expression operator-(const Expression& a, const Expression& b);
    friend Expression operator*(const Expression& a, const Expression& b);
    friend Expression operator/(const Expression& a, const Expression& b);
    friend Expression operator-(const Expression& a);
    friend Expression pow(const Expression& base, unsigned exponent);

private:
    explicit Expression(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
};

using ParameterMap = std::map<std::string, double, std::less<>>;

/// Parses `source` over `variables`; identifiers found in `parameters` are
/// substituted by their value. Variables shadow parameters of the same name.
///
/// Grammar (whitespace-insensitive):
///   sum     := product (('+' | '-') product)*
///   product := unary (('*' | '/') unary)*
///   unary   := '-' unary | '+' unary | power
///   power   := primary ('^' integer)*
///   primary := number | identifier | '(' sum ')'
Expression parse(std::string_view source, std::span<const std::string> variables,
                 const ParameterMap& parameters = {});

/// Exact partial derivative with respect to variable `index`, constant-folded.
Expression differentiate(const Expression& expr, std::size_t index);

/// Looks `variable` up in `variables`; throws ConfigError if absent.
Expression differentiate(const Expression& expr, std::span<const std::string> variables,
                         std::string_view variable);

/// Renders with the given variable names; `parse(to_string(e, v), v)` evaluates
/// identically to `e` (literals use round-trip precision).
std::string to_string(const Expression& expr, std::span<const std::string> variables);

}  // namespace exitfem
