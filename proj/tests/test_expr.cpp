#include "doctest.h"

#include "selfstab/expr.hpp"
#include "selfstab/model.hpp"
#include "selfstab/rng.hpp"

#include <cmath>
#include <functional>

using namespace selfstab;
using namespace selfstab::expr;

TEST_CASE("parse evaluates the planar potential") {
  const Expression e = parse("6*x1^2 + 0.5*x2^2", 2);
  CHECK(e(make_vec({1.0, 2.0})) == doctest::Approx(8.0).epsilon(1e-15));
  CHECK(e(make_vec({0.3, -1.0})) == doctest::Approx(6 * 0.09 + 0.5).epsilon(1e-15));
}

TEST_CASE("identity expression") {
  const Expression e = parse("x1", 1);
  CHECK(e(make_vec({3.25})) == 3.25);
}

TEST_CASE("precedence and associativity") {
  CHECK(parse("-x1^2", 1)(make_vec({3.0})) == -9.0);
  CHECK(parse("2^3^2", 1)(make_vec({0.0})) == 512.0);
  CHECK(parse("8/4/2", 1)(make_vec({0.0})) == 1.0);
  CHECK(parse("1 - 2 - 3", 1)(make_vec({0.0})) == -4.0);
  CHECK(parse("2*x1^-1", 1)(make_vec({4.0})) == 0.5);
  CHECK(parse("(-2)^3", 1)(make_vec({0.0})) == -8.0);
  CHECK(parse("min(x1, 2) + max(x1, 2)", 1)(make_vec({5.0})) == 7.0);
  CHECK(parse("2.5e-1*pi", 1)(make_vec({0.0})) == doctest::Approx(0.25 * M_PI));
}

TEST_CASE("syntax errors carry the byte offset and expected tokens") {
  try {
    parse("2*(x1", 1);
    FAIL("expected a syntax error");
  } catch (const SyntaxError& e) {
    CHECK(e.offset() == 5);
    REQUIRE(e.expected().size() == 1);
    CHECK(e.expected()[0] == ")");
  }
  CHECK_THROWS_AS(parse("x1 x1", 1), SyntaxError);
  CHECK_THROWS_AS(parse("", 1), SyntaxError);
  CHECK_THROWS_AS(parse("3 +", 1), SyntaxError);
}

TEST_CASE("unknown identifiers and arity mismatches") {
  try {
    parse("x1 + x3", 2);
    FAIL("expected unknown identifier");
  } catch (const SyntaxError& e) {
    CHECK(e.offset() == 5);
    CHECK(std::string(e.what()).find("x3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse("exp(x1, x1)", 1), SyntaxError);
  CHECK_THROWS_AS(parse("smoothstep(0, 1)", 1), SyntaxError);
  CHECK_THROWS_AS(parse("foo(x1)", 1), SyntaxError);
}

TEST_CASE("gradient examples") {
  const auto g1 = eval_gradient(parse("6*x1^2+0.5*x2^2", 2), make_vec({1.0, 2.0}));
  CHECK(g1.value == 8.0);
  CHECK(g1.partials == std::vector<double>{12.0, 2.0});

  const auto g2 = eval_gradient(parse("x1", 1), make_vec({3.0}));
  CHECK(g2.value == 3.0);
  CHECK(g2.partials == std::vector<double>{1.0});

  const auto g3 = eval_gradient(parse("x1*x2", 2), make_vec({2.0, 5.0}));
  CHECK(g3.value == 10.0);
  CHECK(g3.partials == std::vector<double>{5.0, 2.0});
}

TEST_CASE("second directional derivative") {
  // <h, D(grad U) h>; for V = -grad U this is -<h, DV h>.
  const Expression planar = parse("6*x1^2 + 0.5*x2^2", 2);
  CHECK(eval_jacobian_action(planar, make_vec({0.7, -3.0}), make_vec({1.0, 0.0})) ==
        doctest::Approx(12.0));
  CHECK(eval_jacobian_action(planar, make_vec({0.0, 0.0}), make_vec({0.0, 1.0})) ==
        doctest::Approx(1.0));
  CHECK(eval_jacobian_action(parse("0.5*x1^2", 1), make_vec({2.0}), make_vec({1.0})) ==
        doctest::Approx(1.0));
  CHECK(eval_jacobian_action(parse("x1^4/4", 1), make_vec({0.0}), make_vec({1.0})) == 0.0);
  CHECK_THROWS_AS(eval_jacobian_action(planar, make_vec({0.0, 0.0}), make_vec({1.0, 1.0})),
                  PreconditionError);

  const Mat hess = eval_hessian(parse("x1^2*x2 + sin(x2)", 2), make_vec({1.5, 0.3}));
  CHECK(hess(0, 0) == doctest::Approx(2 * 0.3));
  CHECK(hess(0, 1) == doctest::Approx(2 * 1.5));
  CHECK(hess(1, 0) == doctest::Approx(2 * 1.5));
  CHECK(hess(1, 1) == doctest::Approx(-std::sin(0.3)));
}

TEST_CASE("domain errors name the offending subexpression") {
  try {
    parse("1 + log(x1 - 2)", 1)(make_vec({1.0}));
    FAIL("expected a domain error");
  } catch (const EvalDomainError& e) {
    CHECK(e.subexpression() == "log((x1 - 2))");
  }
  CHECK_THROWS_AS(parse("1/x1", 1)(make_vec({0.0})), EvalDomainError);
  CHECK_THROWS_AS(parse("sqrt(x1)", 1)(make_vec({-1.0})), EvalDomainError);
  CHECK_THROWS_AS(parse("x1^0.5", 1)(make_vec({-1.0})), EvalDomainError);
  CHECK(parse("x1^0.5", 1)(make_vec({4.0})) == doctest::Approx(2.0));
}

TEST_CASE("abs has subgradient zero at the kink; smoothstep is the cubic clamp") {
  const auto g = eval_gradient(parse("abs(x1)", 1), make_vec({0.0}));
  CHECK(g.value == 0.0);
  CHECK(g.partials[0] == 0.0);
  CHECK(eval_gradient(parse("abs(x1)", 1), make_vec({-2.0})).partials[0] == -1.0);

  const Expression s = parse("smoothstep(1, 3, x1)", 1);
  CHECK(s(make_vec({0.0})) == 0.0);
  CHECK(s(make_vec({4.0})) == 1.0);
  CHECK(s(make_vec({2.0})) == doctest::Approx(0.5));
  CHECK(eval_gradient(s, make_vec({2.0})).partials[0] == doctest::Approx(0.75));
  CHECK(eval_gradient(s, make_vec({1.0 + 1e-9})).partials[0] == doctest::Approx(0.0));
}

namespace {

// Random expression text over x1..x<dim>, depth <= 5, built only from
// operations that stay in their real domain everywhere.
std::string random_expression(CounterRng& rng, int dim, int depth) {
  if (depth == 0 || rng.uniform() < 0.25) {
    if (rng.uniform() < 0.6) {
      return "x" + std::to_string(1 + static_cast<int>(rng.uniform() * dim));
    }
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.3f", rng.uniform(0.5, 3.0));
    return buffer;
  }
  const auto sub = [&] { return random_expression(rng, dim, depth - 1); };
  switch (static_cast<int>(rng.uniform() * 10)) {
    case 0:
      return "(" + sub() + " + " + sub() + ")";
    case 1:
      return "(" + sub() + " - " + sub() + ")";
    case 2:
      return "(" + sub() + " * " + sub() + ")";
    case 3:
      return "(" + sub() + " / (1 + (" + sub() + ")^2))";
    case 4:
      return "(" + sub() + ")^" + std::to_string(2 + static_cast<int>(rng.uniform() * 2));
    case 5:
      return "exp(sin(" + sub() + "))";
    case 6:
      return "log(1 + (" + sub() + ")^2)";
    case 7:
      return "sqrt(1 + (" + sub() + ")^2)";
    case 8:
      return "cos(" + sub() + ")";
    default:
      return "-" + sub();
  }
}

}  // namespace

TEST_CASE("property: forward-mode gradients match central differences") {
  CounterRng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int dim = 1 + trial % 3;
    const Expression e = parse(random_expression(rng, dim, 5), dim);
    Vec x(dim);
    for (int i = 0; i < dim; ++i) x(i) = rng.uniform(-1.5, 1.5);
    const auto dual = eval_gradient(e, x);
    CHECK(dual.value == doctest::Approx(e(x)).epsilon(1e-14));
    const double h = 1e-5;
    for (int i = 0; i < dim; ++i) {
      Vec xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      const double fd = (e(xp) - e(xm)) / (2 * h);
      const double scale = std::max({1.0, std::abs(dual.partials[i]), std::abs(dual.value)});
      INFO(e.source());
      CHECK(std::abs(dual.partials[i] - fd) <= 1e-6 * scale);
    }
  }
}

TEST_CASE("property: render round-trips") {
  CounterRng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const int dim = 1 + trial % 3;
    const Expression e = parse(random_expression(rng, dim, 5), dim);
    const Expression back = parse(e.render(), dim);
    for (int k = 0; k < 100; ++k) {
      Vec x(dim);
      for (int i = 0; i < dim; ++i) x(i) = rng.uniform(-2.0, 2.0);
      const double a = e(x);
      const double b = back(x);
      CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
    }
  }
}

TEST_CASE("property: Hessian is symmetric and matches differences of the gradient") {
  CounterRng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const int dim = 2 + trial % 2;
    const Expression e = parse(random_expression(rng, dim, 4), dim);
    Vec x(dim);
    for (int i = 0; i < dim; ++i) x(i) = rng.uniform(-1.0, 1.0);
    const Mat hess = eval_hessian(e, x);
    CHECK((hess - hess.transpose()).norm() <= 1e-10 * std::max(1.0, hess.norm()));
    Vec gp, gm;
    for (int j = 0; j < dim; ++j) {
      Vec xp = x, xm = x;
      xp(j) += 1e-5;
      xm(j) -= 1e-5;
      eval_gradient(e, xp, gp);
      eval_gradient(e, xm, gm);
      const Vec column = (gp - gm) / 2e-5;
      CHECK((column - hess.col(j)).norm() <= 1e-5 * std::max(1.0, hess.norm()));
    }
    // Directional form agrees with the full Hessian.
    Vec h = Vec::Ones(dim).normalized();
    CHECK(eval_jacobian_action(e, x, h) ==
          doctest::Approx(h.dot(hess * h)).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("polynomial coefficients of one-variable expressions") {
  using Coeffs = std::vector<double>;
  CHECK(expr::parse_profile("2.5*u").polynomial_coefficients() == Coeffs{0.0, 2.5});
  CHECK(expr::parse_profile("u + 0.5*u^3").polynomial_coefficients() == Coeffs{0.0, 1.0, 0.0, 0.5});
  CHECK(expr::parse_profile("(u - 1)^2 / 2").polynomial_coefficients() == Coeffs{0.5, -1.0, 0.5});
  CHECK(expr::parse_profile("exp(0)*u - u").polynomial_coefficients() == Coeffs{0.0});
  CHECK_FALSE(expr::parse_profile("u^0.5").polynomial_coefficients());
  CHECK_FALSE(expr::parse_profile("1/u").polynomial_coefficients());
  CHECK_FALSE(expr::parse_profile("sin(u)").polynomial_coefficients());
  CHECK_FALSE(expr::parse_profile("u^40").polynomial_coefficients());
  CHECK_FALSE(expr::parse("x1*x2", 2).polynomial_coefficients());

  const auto phi = RadialProfile::parse("4*u");
  CHECK(phi.is_linear());
  CHECK(phi.linear_slope() == 4.0);
  CHECK(phi.describe() == "expr:4*u");
  CHECK(RadialProfile::from_description(phi.describe()).coefficients() == phi.coefficients());
}
