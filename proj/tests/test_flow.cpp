#include "doctest.h"

#include "selfstab/flow.hpp"

#include <cmath>
#include <numbers>

using namespace selfstab;

namespace {

ModelSpec ou(double slope = 0.0) {
  return ModelSpec::gradient(1, expr::parse("0.5*x1^2", 1), RadialProfile::polynomial({0.0, slope}));
}

ModelSpec planar() {
  return ModelSpec::gradient(2, expr::parse("6*x1^2 + 0.5*x2^2", 2), RadialProfile::parse("4*u"));
}

}  // namespace

TEST_CASE("domains: membership, boundary parameters and crossings") {
  const auto ellipse = Domain::ellipse(Vec::Zero(2), make_vec({1.0, 2.0}));
  CHECK(ellipse.contains(Vec::Zero(2)));
  CHECK_FALSE(ellipse.contains(make_vec({0.0, 2.5})));
  for (const Vec& p : ellipse.boundary_samples(37)) {
    CHECK(std::abs(ellipse.level(p)) <= 1e-12);
    CHECK((ellipse.boundary_point(ellipse.boundary_param(p)) - p).norm() <= 1e-12);
  }
  CHECK(ellipse.boundary_param(make_vec({0.0, 2.0})) == doctest::Approx(std::numbers::pi / 2));

  const auto interval = Domain::interval(-1.4, 1.0);
  CHECK(interval.boundary_samples(5).size() == 2);
  CHECK(interval.boundary_param(make_vec({-1.4})) == -1.0);
  CHECK(interval.boundary_point(1.0)(0) == doctest::Approx(1.0));
  CHECK(interval.contains(make_vec({0.99})));
  CHECK_FALSE(interval.contains(make_vec({1.0})));

  double fraction = 0;
  const Vec hit = ellipse.locate_crossing(make_vec({0.9, 0.0}), make_vec({1.3, 0.1}), fraction);
  CHECK(std::abs(ellipse.level(hit)) <= 1e-9);
  CHECK(fraction > 0.0);
  CHECK(fraction < 1.0);

  const auto ball = Domain::ball(make_vec({1.0, 0.0, 0.0}), 2.0);
  for (const Vec& p : ball.boundary_samples(50)) CHECK(std::abs(ball.level(p)) <= 1e-12);

  const auto disk = Domain::implicit(expr::parse("x1^2 + x2^2 - 1", 2),
                                     {make_vec({1.0, 0.0}), make_vec({0.0, 1.0})}, Box::cube(2, 1.0));
  CHECK(disk.contains(make_vec({0.5, 0.5})));
  CHECK(disk.boundary_param(make_vec({0.1, 0.9})) == 1.0);
  CHECK_THROWS_AS(Domain::implicit(expr::parse("x1^2 - 1", 1), {make_vec({0.5})}, Box::cube(1, 1)),
                  PreconditionError);
}

TEST_CASE("integrate_flow examples") {
  const auto path = integrate_flow(ou(), make_vec({1.0}), 1.0, 1e-3);
  CHECK(std::abs(path.final_state()(0) - std::exp(-1.0)) <= 1e-8);
  CHECK(path.states.size() == 1001);

  const auto still = integrate_flow(planar(), Vec::Zero(2), 1.0, 1e-2);
  for (const Vec& x : still.states) CHECK(x.norm() == 0.0);

  const auto p = integrate_flow(planar(), make_vec({1.0, 1.0}), 1.0, 1e-3);
  CHECK(p.final_state()(0) == doctest::Approx(std::exp(-12.0)).epsilon(1e-6));
  CHECK(p.final_state()(1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-8));

  const auto expansive = ModelSpec::from_drift(1, {expr::parse("x1^3", 1)}, RadialProfile());
  CHECK_THROWS_AS(integrate_flow(expansive, make_vec({2.0}), 10.0, 1e-3), DivergenceError);
}

TEST_CASE("integrate_relaxed_flow examples") {
  const auto still = integrate_relaxed_flow(planar(), Vec::Zero(2), Vec::Zero(2), 1.0, 1e-2);
  CHECK(still.final_state().norm() == 0.0);
  const auto one_d = integrate_relaxed_flow(ou(1.0), Vec::Zero(1), make_vec({1.0}), 1.0, 1e-3);
  CHECK(std::abs(one_d.final_state()(0) - std::exp(-2.0)) <= 1e-8);
  const auto two_d = integrate_relaxed_flow(planar(), Vec::Zero(2), make_vec({1.0, 0.0}), 0.5, 1e-3);
  CHECK(two_d.final_state()(0) == doctest::Approx(std::exp(-8.0)).epsilon(1e-6));
}

TEST_CASE("flow properties: semigroup, fourth order, Lyapunov decrease") {
  const auto model = ModelSpec::gradient(2, expr::parse("x1^4/4 + x1^2 + x2^2 + 0.3*x1*x2", 2),
                                         RadialProfile());
  const Vec x0 = make_vec({1.2, -0.7});
  const Vec direct = integrate_flow(model, x0, 1.5, 1e-3).final_state();
  const Vec half = integrate_flow(model, x0, 0.5, 1e-3).final_state();
  const Vec composed = integrate_flow(model, half, 1.0, 1e-3).final_state();
  CHECK((direct - composed).norm() <= 1e-7);

  // Richardson: successive halvings shrink the change by about 16.
  const auto ou_model = ou();
  double previous = 0.0;
  Vec last = integrate_flow(ou_model, make_vec({1.0}), 1.0, 0.2).final_state();
  for (double dt : {0.1, 0.05, 0.025}) {
    const Vec now = integrate_flow(ou_model, make_vec({1.0}), 1.0, dt).final_state();
    const double change = (now - last).norm();
    if (previous > 0) CHECK(change <= previous / 16.0 * 1.1);
    previous = change;
    last = now;
  }

  const auto path = integrate_flow(model, make_vec({-2.0, 1.5}), 5.0, 1e-3);
  for (std::size_t k = 1; k < path.states.size(); ++k) {
    CHECK(model.potential(path.states[k]) <= model.potential(path.states[k - 1]) + 1e-10);
  }
}

TEST_CASE("find_equilibrium examples") {
  const auto r = find_equilibrium(planar(), make_vec({0.5, -1.0}));
  CHECK(r.point.norm() <= 1e-10);
  CHECK(r.stable);
  CHECK(find_equilibrium(ou(), make_vec({7.0})).point(0) == doctest::Approx(0.0).scale(1.0));

  const auto double_well = ModelSpec::gradient(1, expr::parse("x1^4/4 - x1^2/2", 1), RadialProfile());
  const auto w = find_equilibrium(double_well, make_vec({0.2}));
  CHECK(std::abs(w.point(0) - 1.0) <= 1e-10);
  CHECK(w.stable);
  CHECK(w.used_flow);

  const auto repeller = ModelSpec::from_drift(1, {expr::parse("x1", 1)}, RadialProfile());
  const auto u = find_equilibrium(repeller, make_vec({0.0}));
  CHECK_FALSE(u.stable);
}

TEST_CASE("verify_domain_stability examples") {
  const auto ellipse = Domain::ellipse(Vec::Zero(2), make_vec({1.0, 2.0}));
  StabilityOptions options;
  options.n_boundary = 32;
  options.n_interior = 32;
  options.horizon = 10.0;
  options.dt = 1e-2;
  const auto ok = verify_domain_stability(planar(), ellipse, Vec::Zero(2), options);
  CHECK(ok.passed);
  CHECK(ok.n_checked == 64);

  CHECK_THROWS_AS(verify_domain_stability(planar(), ellipse, make_vec({3.0, 0.0}), options),
                  PreconditionError);

  const auto repeller = ModelSpec::from_drift(1, {expr::parse("x1", 1)}, RadialProfile());
  const auto bad = verify_domain_stability(repeller, Domain::interval(-1, 1), Vec::Zero(1), options);
  CHECK_FALSE(bad.passed);
  CHECK(bad.failures.size() >= 2);
}
