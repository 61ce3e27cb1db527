#include "doctest.h"

#include "selfstab/model.hpp"
#include "selfstab/rng.hpp"

#include <cmath>

using namespace selfstab;

namespace {

ModelSpec planar_model() {
  return ModelSpec::gradient(2, expr::parse("6*x1^2 + 0.5*x2^2", 2), RadialProfile::parse("4*u"));
}

Vec random_vec(CounterRng& rng, int dim, double scale) {
  Vec x(dim);
  for (int i = 0; i < dim; ++i) x(i) = rng.uniform(-scale, scale);
  return x;
}

}  // namespace

TEST_CASE("interaction force examples") {
  const auto linear = RadialProfile::polynomial({0.0, 4.0});
  CHECK(interaction_force(linear, Vec::Zero(2)) == Vec::Zero(2));
  CHECK(interaction_force(linear, Vec::Zero(3)) == Vec::Zero(3));
  CHECK(interaction_force(linear, make_vec({1.0, 0.0})) == make_vec({4.0, 0.0}));
  CHECK(interaction_force(RadialProfile::parse("2.5*u"), make_vec({-0.4}))(0) ==
        doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("interaction potential examples") {
  const auto model = planar_model();
  CHECK(interaction_potential(model, Vec::Zero(2)) == 0.0);
  CHECK(interaction_potential(model, make_vec({0.0, 2.0})) == doctest::Approx(8.0).epsilon(1e-12));
  const auto one_d =
      ModelSpec::gradient(1, expr::parse("0.5*x1^2", 1), RadialProfile::parse("2.5*u"));
  CHECK(interaction_potential(one_d, make_vec({1.4})) == doctest::Approx(2.45).epsilon(1e-12));

  // Closed form for polynomial profiles, quadrature otherwise; they agree.
  const auto poly = RadialProfile::polynomial({0.0, 1.0, 0.0, 2.0});
  const auto quad = RadialProfile::parse("u + 2*u^3");
  for (double r : {0.0, 0.3, 1.0, 2.7}) {
    CHECK(quad.integral(r) == doctest::Approx(poly.integral(r)).epsilon(1e-10));
  }
  CHECK(RadialProfile::parse("sin(u)").integral(M_PI) == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("profile descriptions round-trip") {
  for (const auto& p : {RadialProfile::polynomial({0.0, 2.5}), RadialProfile::parse("4*u + u^3")}) {
    const auto back = RadialProfile::from_description(p.describe());
    for (double u : {0.0, 0.5, 3.0}) CHECK(back.value(u) == p.value(u));
  }
  CHECK(RadialProfile::polynomial({0.0, 3.0}).is_linear());
  CHECK_FALSE(RadialProfile::polynomial({0.0, 3.0, 1.0}).is_linear());
  CHECK(RadialProfile().is_zero());
}

TEST_CASE("model construction validates orders and dimensions") {
  CHECK(planar_model().weight_order() == 1);
  CHECK_THROWS_AS(ModelSpec::gradient(2, expr::parse("x1", 1), RadialProfile()), PreconditionError);
  CHECK_THROWS_AS(ModelSpec::gradient(1, expr::parse("x1^2", 1), RadialProfile(), 4, 2),
                  PreconditionError);
  CHECK(ModelSpec::gradient(1, expr::parse("x1^2", 1), RadialProfile(), 4).weight_order() == 3);
  const auto drift_model = ModelSpec::from_drift(2, {expr::parse("-x1 + x2", 2), expr::parse("-x2", 2)},
                                                 RadialProfile());
  CHECK_FALSE(drift_model.has_potential());
  CHECK_THROWS_AS(drift_model.potential(Vec::Zero(2)), ModelError);
  const Mat jac = drift_model.drift_jacobian(make_vec({0.3, 0.2}));
  CHECK(jac(0, 0) == -1.0);
  CHECK(jac(0, 1) == 1.0);
  CHECK(jac(1, 0) == 0.0);
}

TEST_CASE("estimate_constants examples") {
  const auto ou = ModelSpec::gradient(1, expr::parse("0.5*x1^2", 1), RadialProfile());
  const auto c = estimate_constants(ou, Box::cube(1, 3.0), 0.1);
  CHECK(c.k_upper == 0.0);
  CHECK(c.k_upper_raw == doctest::Approx(-1.0));
  CHECK(c.k_convex == doctest::Approx(1.0));
  CHECK(c.eta == doctest::Approx(0.25));
  CHECK(c.r1 >= 2 * c.r0);
  CHECK(c.r1 >= 4 * c.sup_drift_on_r0_sphere / c.k_convex - 1e-12);

  const auto planar = estimate_constants(planar_model(), Box::cube(2, 3.0), 1.0);
  CHECK(planar.k_convex == doctest::Approx(1.0));
  CHECK(planar.eta == doctest::Approx(0.25));
  CHECK(planar.eta == planar.k_convex / 4);
  // sup over |y| = 1 of |(-12 y1, -y2)| is 12, so R1 = max(2, 48).
  CHECK(planar.r1 == doctest::Approx(48.0));

  const auto expansive = ModelSpec::from_drift(1, {expr::parse("x1", 1)}, RadialProfile());
  try {
    estimate_constants(expansive, Box::cube(1, 3.0), 1.0);
    FAIL("expected a model error");
  } catch (const ModelError& e) {
    CHECK(std::string(e.what()).find("violated") != std::string::npos);
  }
  CHECK_THROWS_AS(estimate_constants(ou, Box::cube(1, 0.5), 1.0), PreconditionError);
}

TEST_CASE("check_assumptions examples") {
  const auto report = check_assumptions(planar_model(), Box::cube(2, 3.0));
  CHECK(report.all_passed());
  CHECK(report.global_convexity);
  CHECK(report.global_convexity_constant == doctest::Approx(1.0));

  const auto repulsive =
      ModelSpec::gradient(1, expr::parse("0.5*x1^2", 1), RadialProfile::parse("-u"));
  const auto bad = check_assumptions(repulsive, Box::cube(1, 2.0));
  CHECK_FALSE(bad.all_passed());
  CHECK_FALSE(bad.find("profile_monotone")->passed);

  const auto quartic = ModelSpec::gradient(1, expr::parse("x1^4/4", 1), RadialProfile::parse("u"));
  AssumptionTolerances tol;
  tol.r0 = 0.5;
  const auto q = check_assumptions(quartic, Box::cube(1, 2.0), tol);
  CHECK(q.find("local_dissipativity")->passed);
  CHECK_FALSE(q.global_convexity);
  CHECK(q.all_passed());

  // Cubic interaction with growth order 1 is flagged; order 3 passes.
  const auto cubic1 = ModelSpec::gradient(1, expr::parse("0.5*x1^2", 1),
                                          RadialProfile::polynomial({0, 0, 0, 1}), 1);
  CHECK_FALSE(check_assumptions(cubic1, Box::cube(1, 2.0)).find("polynomial_growth")->passed);
  const auto cubic3 = ModelSpec::gradient(1, expr::parse("0.5*x1^2", 1),
                                          RadialProfile::polynomial({0, 0, 0, 1}), 3);
  CHECK(check_assumptions(cubic3, Box::cube(1, 2.0)).find("polynomial_growth")->passed);
}

TEST_CASE("property: interaction antisymmetry, alignment and Schwarz monotonicity") {
  CounterRng rng(21);
  const RadialProfile profiles[] = {RadialProfile::polynomial({0.0, 4.0}),
                                    RadialProfile::parse("u + u^3"),
                                    RadialProfile::parse("2*u/(1+u)")};
  for (const auto& phi : profiles) {
    for (int k = 0; k < 1000; ++k) {
      const int dim = 1 + k % 3;
      const Vec z = random_vec(rng, dim, 3.0);
      const Vec f = interaction_force(phi, z);
      CHECK((interaction_force(phi, Vec(-z)) + f).norm() <= 1e-12 * (1.0 + f.norm()));
      CHECK(z.dot(f) == doctest::Approx(z.norm() * phi.value(z.norm())).epsilon(1e-12));
      CHECK(z.dot(f) >= 0.0);

      const Vec x = random_vec(rng, dim, 2.0);
      const Vec y = random_vec(rng, dim, 2.0);
      const Vec fxy = interaction_force(phi, Vec(x - y));
      for (int n = 0; n <= 2; ++n) {
        const Vec lhs = x * std::pow(x.norm(), n) - y * std::pow(y.norm(), n);
        CHECK(lhs.dot(fxy) >= -1e-12);
      }
    }
  }
}

TEST_CASE("property: Phi is the gradient of the interaction potential") {
  CounterRng rng(22);
  const auto model = ModelSpec::gradient(2, expr::parse("x1^2 + x2^2", 2),
                                         RadialProfile::polynomial({0.0, 1.0, 0.5}));
  for (int k = 0; k < 200; ++k) {
    const Vec z = random_vec(rng, 2, 2.0);
    if (z.norm() < 1e-3) continue;
    const Vec f = interaction_force(model, z);
    Vec fd(2);
    const double h = 1e-5;
    for (int i = 0; i < 2; ++i) {
      Vec zp = z, zm = z;
      zp(i) += h;
      zm(i) -= h;
      fd(i) = (interaction_potential(model, zp) - interaction_potential(model, zm)) / (2 * h);
    }
    CHECK((f - fd).norm() <= 1e-8);
  }
}

TEST_CASE("interaction Jacobian matches finite differences") {
  CounterRng rng(23);
  const auto phi = RadialProfile::parse("u + 0.5*u^3");
  for (int k = 0; k < 100; ++k) {
    const Vec z = random_vec(rng, 2, 2.0);
    const Mat jac = interaction_jacobian(phi, z);
    for (int j = 0; j < 2; ++j) {
      Vec zp = z, zm = z;
      zp(j) += 1e-6;
      zm(j) -= 1e-6;
      const Vec col = (interaction_force(phi, zp) - interaction_force(phi, zm)) / 2e-6;
      CHECK((col - jac.col(j)).norm() <= 1e-6 * std::max(1.0, jac.norm()));
    }
  }
  CHECK(interaction_jacobian(RadialProfile::polynomial({0, 3}), Vec::Zero(2)) ==
        3.0 * Mat::Identity(2, 2));
}
