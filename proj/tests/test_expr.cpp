#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <string>

#include "swipde/expr.hpp"

using swipde::EvalError;
using swipde::Expr;
using swipde::ParseError;
using swipde::UndeclaredVariable;
using swipde::VarSet;
using Bindings = std::map<std::string, double, std::less<>>;

TEST(Expr, Precedence) {
    EXPECT_EQ(Expr::parse("1+2*3", {}).eval(Bindings{}), 7.0);
    EXPECT_EQ(Expr::parse("-2^2", {}).eval(Bindings{}), -4.0);
    EXPECT_EQ(Expr::parse("2^3^2", {}).eval(Bindings{}), 64.0);  // left-associative
    EXPECT_EQ(Expr::parse("8/2/2", {}).eval(Bindings{}), 2.0);
    EXPECT_EQ(Expr::parse("1-2-3", {}).eval(Bindings{}), -4.0);
    EXPECT_EQ(Expr::parse("(1+2)*3", {}).eval(Bindings{}), 9.0);
    EXPECT_EQ(Expr::parse("2^-1", {}).eval(Bindings{}), 0.5);
}

TEST(Expr, Variables) {
    Expr e = Expr::parse("x1^2 - t", {"t", "x1"});
    EXPECT_DOUBLE_EQ(e.eval(Bindings{{"t", 1.0}, {"x1", 3.0}}), 8.0);
    EXPECT_EQ(e.variables(), (std::set<std::string>{"t", "x1"}));
    EXPECT_DOUBLE_EQ(Expr::parse("x1*x1", {"x1"}).eval(Bindings{{"x1", 3.0}}), 9.0);
}

TEST(Expr, UndeclaredVariable) {
    try {
        Expr::parse("y1 + y7", {"y1", "y2", "y3"});
        FAIL() << "expected UndeclaredVariable";
    } catch (const UndeclaredVariable& e) {
        EXPECT_EQ(e.name(), "y7");
    }
}

TEST(Expr, SyntaxErrorsCarryOffset) {
    try {
        Expr::parse("1 + * 2", {});
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.offset(), 4u);
    }
    EXPECT_THROW(Expr::parse("", {}), ParseError);
    EXPECT_THROW(Expr::parse("(1", {}), ParseError);
    EXPECT_THROW(Expr::parse("2^x", {"x"}), ParseError);
    EXPECT_THROW(Expr::parse("sin(1, 2)", {}), ParseError);
    EXPECT_THROW(Expr::parse("foo(1)", {}), ParseError);
}

TEST(Expr, Functions) {
    EXPECT_EQ(Expr::parse("sin(0)", {}).eval(Bindings{}), 0.0);
    EXPECT_DOUBLE_EQ(Expr::parse("cos(pi)", {}).eval(Bindings{}), -1.0);
    EXPECT_DOUBLE_EQ(Expr::parse("exp(1)", {}).eval(Bindings{}), std::exp(1.0));
    EXPECT_DOUBLE_EQ(Expr::parse("tanh(0.5)", {}).eval(Bindings{}), std::tanh(0.5));
    EXPECT_EQ(Expr::parse("abs(-3)", {}).eval(Bindings{}), 3.0);
    EXPECT_EQ(Expr::parse("sqrt(16)", {}).eval(Bindings{}), 4.0);
    EXPECT_EQ(Expr::parse("min(2, -1)", {}).eval(Bindings{}), -1.0);
    EXPECT_EQ(Expr::parse("max(2, -1)", {}).eval(Bindings{}), 2.0);
}

TEST(Expr, EvaluationErrors) {
    Expr inv = Expr::parse("1/x1", {"x1"});
    EXPECT_THROW(inv.eval(Bindings{{"x1", 0.0}}), EvalError);
    EXPECT_THROW(Expr::parse("sqrt(x1)", {"x1"}).eval(Bindings{{"x1", -1.0}}), EvalError);
    EXPECT_THROW(inv.eval(Bindings{}), EvalError);
    EXPECT_THROW(Expr::parse("exp(1000)", {}).eval(Bindings{}), EvalError);
}

TEST(Expr, BoundEvaluationMatchesMap) {
    Expr e = Expr::parse("x1*q - max(t, y2)", {"t", "x1", "y2", "q"});
    Expr b = e.bind({"t", "x1", "y2", "q"});
    std::vector<double> v{0.3, 2.0, 0.7, -1.5};
    EXPECT_EQ(b.eval(std::span<const double>(v)),
              e.eval(Bindings{{"t", 0.3}, {"x1", 2.0}, {"y2", 0.7}, {"q", -1.5}}));
}

TEST(Expr, PrintParseRoundTrip) {
    const VarSet vars{"t", "x1", "x2", "q"};
    const char* sources[] = {"1+2*3",
                             "-x1^2 - (t - 3) * -q",
                             "x1 / (x2 / t) - x1 / x2 / t",
                             "max(sin(x1), cos(x2)) ^ 3 + abs(-q) * tanh(t)",
                             "-(x1 - x2) - -x1",
                             "2 ^ -2 * exp(-x1) - 1.5e-3",
                             "sqrt(1 + x1*x1) - min(q, 0)"};
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (const char* src : sources) {
        Expr a = Expr::parse(src, vars);
        Expr b = Expr::parse(a.print(), vars);
        EXPECT_EQ(a.print(), b.print()) << src;
        for (int s = 0; s < 100; ++s) {
            Bindings bind{{"t", u(rng) + 3.0}, {"x1", u(rng)}, {"x2", u(rng) + 5.0}, {"q", u(rng)}};
            EXPECT_EQ(a.eval(bind), b.eval(bind)) << src;
        }
    }
}

TEST(Expr, ConstantDetection) {
    EXPECT_TRUE(Expr::parse("2*pi", {}).is_constant());
    EXPECT_FALSE(Expr::parse("2*x1", {"x1"}).is_constant());
    EXPECT_TRUE(Expr::parse("q+1", {"q"}).uses("q"));
}
