#include "doctest.h"

#include "exitfem/error.hpp"
#include "exitfem/expr.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

using namespace exitfem;

namespace {

const std::vector<std::string> xy{"x", "y"};
const std::vector<std::string> xyz{"x", "y", "z"};

double eval(const std::string& src, const std::vector<std::string>& vars, std::vector<double> p,
            const ParameterMap& params = {}) {
    return parse(src, vars, params).evaluate(p);
}

// Random expression over three variables, nonzero denominators by construction.
Expression random_tree(std::mt19937_64& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 7);
    std::uniform_real_distribution<double> value(-3.0, 3.0);
    switch (pick(rng)) {
        case 0: return Expression::literal(std::round(value(rng) * 1000.0) / 7.0);
        case 1: return Expression::variable(std::uniform_int_distribution<std::size_t>(0, 2)(rng));
        case 2: return random_tree(rng, depth - 1) + random_tree(rng, depth - 1);
        case 3: return random_tree(rng, depth - 1) - random_tree(rng, depth - 1);
        case 4: return random_tree(rng, depth - 1) * random_tree(rng, depth - 1);
        case 5: {
            const Expression d = random_tree(rng, depth - 1);
            return random_tree(rng, depth - 1) / (Expression::literal(10.0) + d * d);
        }
        case 6: return -random_tree(rng, depth - 1);
        default: return pow(random_tree(rng, depth - 1), std::uniform_int_distribution<unsigned>(0, 3)(rng));
    }
}

}  // namespace

TEST_CASE("parse and evaluate basic expressions") {
    CHECK(eval("x*y", xy, {2, 3}) == 6.0);
    CHECK(eval("  x *\ty ", xy, {2, 3}) == 6.0);
    CHECK(eval("1 + 2*3", xy, {0, 0}) == 7.0);
    CHECK(eval("(1 + 2)*3", xy, {0, 0}) == 9.0);
    CHECK(eval("2^3^1", xy, {0, 0}) == 8.0);
    CHECK(eval("-x^2", xy, {3, 0}) == -9.0);
    CHECK(eval("x - y - 1", xy, {5, 1}) == 3.0);
    CHECK(eval("x / y / 2", xy, {8, 2}) == 2.0);
    CHECK(eval("1.5e-3*x", xy, {2, 0}) == doctest::Approx(3e-3));
    CHECK(eval("2E2", xy, {0, 0}) == 200.0);
    CHECK(eval("--x", xy, {4, 0}) == 4.0);
}

TEST_CASE("parameters are substituted at parse time") {
    const ParameterMap p{{"s", 1.0}, {"ro", 0.3}, {"alfa", 0.8}};
    const Expression e = parse("s + ro*x*z/(alfa+z)", xyz, p);
    CHECK(e.evaluate(std::vector<double>{3, 1.5, 1}) == doctest::Approx(1.5).epsilon(1e-15));
    // No parameter names survive: the printed form only names variables.
    const std::string printed = to_string(e, xyz);
    CHECK(printed.find("ro") == std::string::npos);
    CHECK(printed.find("alfa") == std::string::npos);
}

TEST_CASE("variables shadow parameters of the same name") {
    CHECK(eval("x + 1", xy, {2, 0}, {{"x", 100.0}}) == 3.0);
}

TEST_CASE("parse errors") {
    CHECK_THROWS_AS(parse("x + w", xy), ParseError);
    try {
        parse("x + w", xy);
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("\"w\"") != std::string::npos);
        CHECK(e.position() == 4);
    }
    CHECK_THROWS_AS(parse("x +", xy), ParseError);
    CHECK_THROWS_AS(parse("(x", xy), ParseError);
    CHECK_THROWS_AS(parse("x y", xy), ParseError);
    CHECK_THROWS_AS(parse("", xy), ParseError);
    CHECK_THROWS_AS(parse("x ^ 1.5", xy), ParseError);
    CHECK_THROWS_AS(parse("x ^ y", xy), ParseError);
    CHECK_THROWS_AS(parse("x ^ -1", xy), ParseError);
    CHECK_THROWS_AS(parse("x $ 2", xy), ParseError);
}

TEST_CASE("evaluation") {
    CHECK(Expression::literal(5).evaluate(std::vector<double>{1, 2}) == 5.0);
    CHECK(Expression::variable(2).evaluate(std::vector<double>{1, 2, 3}) == 3.0);
    const Expression inv = parse("1/(x-1)", xy);
    CHECK_THROWS_AS(inv.evaluate(std::vector<double>{1, 0}), EvaluationError);
    try {
        inv.evaluate(std::vector<double>{1, 0.5});
    } catch (const EvaluationError& e) {
        CHECK(e.point() == std::vector<double>{1, 0.5});
    }
    // A literal zero divisor is kept, so the error surfaces at evaluation.
    CHECK_THROWS_AS(parse("x/0", xy).evaluate(std::vector<double>{1, 1}), EvaluationError);
    CHECK_THROWS_AS(parse("x*y", xy).evaluate(std::vector<double>{1}), Error);
}

TEST_CASE("constant folding") {
    const Expression x = Expression::variable(0);
    CHECK((Expression::literal(0) * x).is_literal(0));
    CHECK((Expression::literal(1) * x).same_node(x));
    CHECK((x + Expression::literal(0)).same_node(x));
    CHECK((x - Expression::literal(0)).same_node(x));
    CHECK((x / Expression::literal(1)).same_node(x));
    CHECK(pow(x, 0).is_literal(1));
    CHECK(pow(x, 1).same_node(x));
    CHECK((Expression::literal(2) * Expression::literal(3)).is_literal(6));
    CHECK(parse("2*3 + 4", xy).is_literal(10));
}

TEST_CASE("symbolic derivatives") {
    const Expression xz = parse("x*z", xyz);
    const Expression d = differentiate(xz, xyz, "x");
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int i = 0; i < 20; ++i) {
        const std::vector<double> p{u(rng), u(rng), u(rng)};
        CHECK(d.evaluate(p) == p[2]);
    }
    CHECK(differentiate(parse("x^3 + z/x", xyz), xyz, "y").is_literal(0));
    CHECK_THROWS_AS(differentiate(xz, xyz, "w"), ConfigError);
}

TEST_CASE("tumor a11 derivative in T matches the closed form") {
    const ParameterMap p{{"s", 1}, {"ro", 0.3}, {"alfa", 0.8}, {"beta1", 1}, {"d1", 0.3}, {"c1", 0.2}};
    const Expression a11 = parse("s + ro*x*z/(alfa+z) + beta1^2*x*z + (d1+c1)*x", xyz, p);
    const Expression closed = parse("ro*x*alfa/(alfa+z)^2 + beta1^2*x", xyz, p);
    const Expression dz = differentiate(a11, xyz, "z");
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ux(0.0, 4.0), uz(0.0, 2.0);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> q{ux(rng), 1.0, uz(rng)};
        const double exact = closed.evaluate(q);
        CHECK(dz.evaluate(q) == doctest::Approx(exact).epsilon(1e-13));
        const double h = 1e-6 * 2.0;
        std::vector<double> qp = q, qm = q;
        qp[2] += h;
        qm[2] -= h;
        const double fd = (a11.evaluate(qp) - a11.evaluate(qm)) / (2 * h);
        CHECK(std::abs(fd - exact) <= 1e-6 * std::max(std::abs(exact), 1.0));
    }
}

TEST_CASE("quotient and power rules against finite differences") {
    std::mt19937_64 rng(3);
    const std::vector<std::string> sources{"x/(1+y^2)", "(x*y - 3)^3", "1/(2 + x*x*y*y) - x/(4+z^2)",
                                           "-(x - y)^2*z/(1 + z^4)"};
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (const auto& src : sources) {
        const Expression e = parse(src, xyz);
        for (std::size_t v = 0; v < 3; ++v) {
            const Expression d = differentiate(e, v);
            for (int i = 0; i < 25; ++i) {
                std::vector<double> p{u(rng), u(rng), u(rng)};
                const double h = 1e-6;
                std::vector<double> pp = p, pm = p;
                pp[v] += h;
                pm[v] -= h;
                const double fd = (e.evaluate(pp) - e.evaluate(pm)) / (2 * h);
                const double scale = std::max({std::abs(d.evaluate(p)), std::abs(e.evaluate(p)), 1.0});
                CHECK(std::abs(fd - d.evaluate(p)) <= 1e-6 * scale);
            }
        }
    }
}

TEST_CASE("printing round-trips through the parser") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int t = 0; t < 300; ++t) {
        const Expression e = random_tree(rng, 5);
        const std::string text = to_string(e, xyz);
        const Expression back = parse(text, xyz);
        for (int i = 0; i < 5; ++i) {
            const std::vector<double> p{u(rng), u(rng), u(rng)};
            const double a = e.evaluate(p);
            const double b = back.evaluate(p);
            INFO(text);
            CHECK(((a == b) || (std::isnan(a) && std::isnan(b))));
        }
    }
}

TEST_CASE("printing is readable") {
    CHECK(to_string(parse("0.3*x + 0.1*y^2", xy), xy) == "0.3*x + 0.1*y^2");
    CHECK(to_string(parse("x - (y - 1)", xy), xy) == "x - (y - 1)");
    CHECK(to_string(parse("x / (y * 2)", xy), xy) == "x/(y*2)");
    CHECK(to_string(Expression::variable(0) + (-Expression::variable(1)), xy) == "x - y");
}
