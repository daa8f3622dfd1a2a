#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "ltvcert/expr.hpp"
#include "support/generators.hpp"

namespace {

using namespace ltvcert;
using ltvtest::Rng;

constexpr double kPi = std::numbers::pi;

TEST(Expr, EvaluatesClosedFormEntries) {
  EXPECT_NEAR(eval(parse("1.1*cos(t/2)+0.1*sin(t)-1"), 0.0), 0.1, 1e-15);
  EXPECT_EQ(eval(parse("t"), 3.5), 3.5);
  EXPECT_NEAR(eval(parse("sin(t)^2+cos(t)^2"), 0.7), 1.0, 1e-15);
  EXPECT_EQ(eval(parse("exp(t)"), 0.0), 1.0);
  EXPECT_NEAR(eval(parse("1.1*cos(t/2)"), kPi), 0.0, 1e-12);
  EXPECT_NEAR(eval(parse("abs(cos(t))+abs(sin(t))"), kPi / 4), std::sqrt(2.0), 1e-15);
}

TEST(Expr, Precedence) {
  EXPECT_EQ(eval(parse("2+3*4"), 0), 14);
  EXPECT_EQ(eval(parse("(2+3)*4"), 0), 20);
  EXPECT_EQ(eval(parse("-2^2"), 0), -4);
  EXPECT_EQ(eval(parse("2^-1"), 0), 0.5);
  EXPECT_EQ(eval(parse("8/4/2"), 0), 1);
  EXPECT_EQ(eval(parse("1-2-3"), 0), -4);
  EXPECT_EQ(eval(parse("--t"), 2.5), 2.5);
  EXPECT_EQ(eval(parse("1e-3*t"), 1000), 1.0);
}

TEST(Expr, DerivativesMatchKnownValues) {
  EXPECT_NEAR(eval(differentiate(parse("cos(t/2)")), kPi), -0.5, 1e-15);
  EXPECT_NEAR(eval(differentiate(parse("1.1*cos(t/2)")), kPi), -0.55, 1e-15);
  const Expression d = differentiate(parse("7"));
  for (double t : {-3.0, 0.0, 1.5, 100.0}) EXPECT_EQ(eval(d, t), 0.0);
  EXPECT_EQ(eval(differentiate(parse("2*t")), 0.3), 2.0);
  EXPECT_NEAR(eval(differentiate(parse("t^3")), 2.0), 12.0, 1e-14);
  EXPECT_NEAR(eval(differentiate(parse("t^-2")), 2.0), -0.25, 1e-15);
  EXPECT_NEAR(eval(differentiate(parse("sqrt(t)")), 4.0), 0.25, 1e-15);
  EXPECT_NEAR(eval(differentiate(parse("exp(2*t)")), 0.0), 2.0, 1e-15);
  EXPECT_NEAR(eval(differentiate(parse("abs(t)")), -2.0), -1.0, 1e-15);
  EXPECT_NEAR(eval(differentiate(parse("1/t")), 2.0), -0.25, 1e-15);
}

TEST(Expr, DomainErrorsAreReported) {
  EXPECT_THROW(eval(parse("1/t"), 0.0), EvalDomainError);
  EXPECT_THROW(eval(parse("sqrt(t)"), -1.0), EvalDomainError);
  EXPECT_THROW(eval(parse("t^-1"), 0.0), EvalDomainError);
  EXPECT_THROW(eval(parse("exp(t)"), 1000.0), EvalDomainError);
}

TEST(Expr, ParseErrorsCarryOffsetAndExpectation) {
  try {
    parse("1+foo(t)");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 2u);
    EXPECT_FALSE(e.expected().empty());
  }
  try {
    parse("sin(t");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 5u);
  }
  EXPECT_THROW(parse(""), ParseError);
  EXPECT_THROW(parse("t^1.5"), ParseError);
  EXPECT_THROW(parse("2 3"), ParseError);
  EXPECT_THROW(parse("x1"), ParseError);
  EXPECT_THROW(parse("x3", 2), ParseError);
  EXPECT_THROW(parse("t$"), ParseError);
}

TEST(Expr, StateSymbols) {
  const Expression e = parse("x1*t+x2^2", 2);
  EXPECT_TRUE(e.depends_on_state());
  const std::vector<double> x{2.0, 3.0};
  EXPECT_EQ(e(0.5, x), 10.0);
  EXPECT_FALSE(parse("t").depends_on_state());
}

TEST(Expr, DeterministicEvaluation) {
  const Expression e = parse("1.1*cos(t/2)+0.1*sin(t)-1");
  const double a = e(1.2345), b = e(1.2345);
  EXPECT_EQ(a, b);
}

// Symbolic derivatives agree with central differences on random trees.
TEST(ExprProperty, DerivativeMatchesFiniteDifferences) {
  Rng rng(101);
  int checked = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const Expression e = parse(ltvtest::random_tree(rng, rng.integer(1, 6)));
    const Expression d = differentiate(e);
    for (int k = 0; k < 5; ++k) {
      const double t = rng.uniform(-3, 3);
      const double h = 1e-6;
      const double fd = (e(t + h) - e(t - h)) / (2 * h);
      const double exact = d(t);
      ASSERT_LE(std::fabs(exact - fd), 1e-5 * (1 + std::fabs(exact)))
          << e.to_string() << " at t = " << t;
      ++checked;
    }
  }
  EXPECT_EQ(checked, 2000);
}

// Printing and re-parsing preserves evaluation exactly.
TEST(ExprProperty, PrintParseRoundTrip) {
  Rng rng(202);
  for (int trial = 0; trial < 400; ++trial) {
    const Expression e = parse(ltvtest::random_tree(rng, rng.integer(0, 6), true));
    const Expression back = parse(e.to_string());
    for (int k = 0; k <= 16; ++k) {
      const double t = -4.0 + 0.5 * k;
      ASSERT_EQ(e(t), back(t)) << e.to_string();
    }
  }
}

}  // namespace
