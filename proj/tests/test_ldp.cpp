#include "doctest.h"

#include "selfstab/ldp.hpp"
#include "selfstab/rng.hpp"

#include <cmath>
#include <numbers>

using namespace selfstab;

namespace {

ModelSpec ou_model(double slope = 1.0) {
  return ModelSpec::gradient(1, expr::parse("0.5*x1^2", 1), RadialProfile::polynomial({0.0, slope}));
}

ModelSpec planar() {
  return ModelSpec::gradient(2, expr::parse("6*x1^2 + 0.5*x2^2", 2), RadialProfile::parse("4*u"));
}

DiscretePath from_states(const std::vector<Vec>& states, double horizon) {
  DiscretePath p{states.front(), states.back(), {}, horizon};
  p.interior.assign(states.begin() + 1, states.end() - 1);
  return p;
}

}  // namespace

TEST_CASE("action examples") {
  // Constant path at 1 under the limiting OU drift: residual 2 throughout.
  const auto limiting = ActionSpec::limiting(ou_model(), Vec::Zero(1));
  CHECK(action(limiting, DiscretePath::straight(make_vec({1.0}), make_vec({1.0}), 2.0, 50)) ==
        doctest::Approx(4.0).epsilon(1e-14));

  // x_t = t under V = -x: 1/2 int (1 + t)^2 = 7/6.
  const auto classical = ActionSpec::classical(ou_model(0.0));
  const double h = 1.0 / 100;
  const double a = action(classical, DiscretePath::straight(make_vec({0.0}), make_vec({1.0}), 1.0, 100));
  CHECK(std::abs(a - 7.0 / 6.0) <= h * h);

  // Relaxed flow path: residual O(h^2).
  const auto spec = ActionSpec::limiting(planar(), Vec::Zero(2));
  for (int n : {50, 100, 200}) {
    const auto flow = integrate_relaxed_flow(planar(), Vec::Zero(2), make_vec({0.8, 1.5}), 1.0, 1.0 / n);
    const double value = action(spec, from_states(flow.states, 1.0));
    CHECK(value <= 10.0 * std::pow(1.0 / n, 4) * 256);
  }
}

TEST_CASE("action_gradient matches finite differences on random paths") {
  CounterRng rng(3);
  const ActionSpec specs[] = {
      ActionSpec::classical(ou_model()),
      ActionSpec::limiting(ModelSpec::gradient(2, expr::parse("x1^4/4 + x2^2 - 0.3*x1*x2", 2),
                                               RadialProfile::parse("u + 0.5*u^3")),
                           make_vec({0.1, -0.2})),
      ActionSpec::tracking(ou_model(2.0), make_vec({1.0}), 0.5, 2.0),
  };
  for (int trial = 0; trial < 100; ++trial) {
    const ActionSpec& spec = specs[trial % 3];
    const int d = spec.model.dim();
    DiscretePath path{Vec(d), Vec(d), {}, rng.uniform(0.5, 2.0)};
    for (int c = 0; c < d; ++c) {
      path.y(c) = rng.uniform(-1, 1);
      path.z(c) = rng.uniform(-1, 1);
    }
    for (int k = 0; k < 9; ++k) {
      Vec v(d);
      for (int c = 0; c < d; ++c) v(c) = rng.uniform(-1.5, 1.5);
      path.interior.push_back(v);
    }
    const auto grad = action_gradient(spec, path);
    for (std::size_t k = 0; k < path.interior.size(); ++k) {
      for (int c = 0; c < d; ++c) {
        DiscretePath p = path, m = path;
        p.interior[k](c) += 1e-6;
        m.interior[k](c) -= 1e-6;
        const double fd = (action(spec, p) - action(spec, m)) / 2e-6;
        CHECK(std::abs(grad[k](c) - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
      }
    }
    CHECK(action(spec, path) >= 0.0);
  }

  // Symmetric configuration: odd drift about x_stable, y = z = x_stable.
  const auto sym = ActionSpec::limiting(planar(), Vec::Zero(2));
  const auto g = action_gradient(sym, DiscretePath::straight(Vec::Zero(2), Vec::Zero(2), 1.0, 20));
  for (const Vec& v : g) CHECK(v.norm() == 0.0);
}

TEST_CASE("minimize_cost examples") {
  const auto spec = ActionSpec::limiting(planar(), Vec::Zero(2));
  const auto still = minimize_cost(spec, Vec::Zero(2), Vec::Zero(2), 3.0, 20);
  CHECK(still.value == 0.0);
  for (const Vec& v : still.path.interior) CHECK(v.norm() == 0.0);

  const auto up = minimize_cost(spec, Vec::Zero(2), make_vec({1.0, 0.0}), 4.0, 200);
  CHECK(up.converged);
  CHECK(up.value == doctest::Approx(16.0).epsilon(0.03));
  CHECK(up.gradient_norm <= 1e-8);

  const auto down = minimize_cost(spec, make_vec({1.0, 0.0}), make_vec({1e-6, 0.0}), 4.0, 200);
  CHECK(down.value <= 1e-3);

  CHECK_THROWS_AS(minimize_cost(spec, Vec::Zero(2), Vec::Zero(2), 1.0, 4), PreconditionError);
}

TEST_CASE("quasi-potential: closed form examples") {
  const auto model = planar();
  CHECK(quasipotential_closed_form(model, Vec::Zero(2), make_vec({1.0, 0.0})) == doctest::Approx(16.0));
  CHECK(quasipotential_closed_form(model, Vec::Zero(2), make_vec({0.0, 2.0})) == doctest::Approx(20.0));
  CHECK(quasipotential_closed_form(model, Vec::Zero(2), Vec::Zero(2)) == 0.0);
  CHECK(quasipotential_closed_form(model, Vec::Zero(2), make_vec({0.0, 2.0}), ActionVariant::kClassical) ==
        doctest::Approx(4.0));
  const auto drift_only = ModelSpec::from_drift(1, {expr::parse("-x1", 1)}, RadialProfile());
  CHECK_THROWS_AS(quasipotential_closed_form(drift_only, Vec::Zero(1), make_vec({1.0})), ModelError);
}

TEST_CASE("quasi-potential: numeric agrees with the closed form") {
  const auto model = planar();
  const auto grid = geometric_grid(0.25, 50.0, 10);
  const auto limiting = ActionSpec::limiting(model, Vec::Zero(2));
  QuasipotentialOptions options;
  options.minimize.multistart = 1;
  options.golden_iterations = 10;
  const auto q16 = quasipotential_numeric(limiting, Vec::Zero(2), make_vec({1.0, 0.0}), grid, 200, options);
  CHECK(std::abs(q16.value - 16.0) / 16.0 <= 0.03);
  CHECK(q16.interior_minimum);
  CHECK(quasipotential_numeric(limiting, make_vec({0.3, 0.3}), make_vec({0.3, 0.3}), grid, 50).value == 0.0);

  const auto classical = ActionSpec::classical(model);
  const auto q4 = quasipotential_numeric(classical, Vec::Zero(2), make_vec({0.0, 2.0}), grid, 200, options);
  CHECK(std::abs(q4.value - 4.0) / 4.0 <= 0.03);

  // Ordering: classical boundary minimum below the stabilized one.
  CHECK(q4.value < q16.value);
}

TEST_CASE("quasi-potential: grid refinement is monotone") {
  const auto model = ModelSpec::gradient(1, expr::parse("0.5*x1^2 + 0.25*x1^4", 1), RadialProfile::parse("u"));
  const auto spec = ActionSpec::limiting(model, Vec::Zero(1));
  const auto grid = geometric_grid(0.5, 20.0, 8);
  QuasipotentialOptions options;
  options.minimize.multistart = 0;
  options.golden_iterations = 8;
  double previous_change = std::numeric_limits<double>::infinity();
  double last = quasipotential_numeric(spec, Vec::Zero(1), make_vec({1.0}), grid, 25, options).value;
  for (int n : {50, 100, 200}) {
    const double now = quasipotential_numeric(spec, Vec::Zero(1), make_vec({1.0}), grid, n, options).value;
    CHECK(std::abs(now - last) <= previous_change + 1e-12);
    previous_change = std::abs(now - last);
    last = now;
  }
  CHECK(last == doctest::Approx(quasipotential_closed_form(model, Vec::Zero(1), make_vec({1.0}))).epsilon(0.01));
}

TEST_CASE("boundary_min examples") {
  const auto model = planar();
  const auto ellipse = Domain::ellipse(Vec::Zero(2), make_vec({1.0, 2.0}));
  const auto classical = boundary_min(
      [&](const Vec& z) {
        return quasipotential_closed_form(model, Vec::Zero(2), z, ActionVariant::kClassical);
      },
      ellipse);
  CHECK(classical.value == doctest::Approx(4.0).epsilon(1e-12));
  REQUIRE(classical.argmins.size() == 2);
  for (const Vec& p : classical.argmins) {
    CHECK(std::abs(p(0)) <= 1e-6);
    CHECK(std::abs(std::abs(p(1)) - 2.0) <= 1e-6);
  }

  const auto stabilized = boundary_min(
      [&](const Vec& z) { return quasipotential_closed_form(model, Vec::Zero(2), z); }, ellipse);
  CHECK(stabilized.value == doctest::Approx(16.0).epsilon(1e-12));
  REQUIRE(stabilized.argmins.size() == 2);
  CHECK(std::abs(std::abs(stabilized.argmins[0](0)) - 1.0) <= 1e-6);
  CHECK(stabilized.argmins[0](0) * stabilized.argmins[1](0) < 0);

  const auto interval = Domain::interval(-1.0, 2.0);
  const auto two_point = boundary_min([](const Vec& z) { return z(0) * z(0); }, interval);
  CHECK(two_point.value == 1.0);
  REQUIRE(two_point.argmins.size() == 1);
  CHECK(two_point.argmins[0](0) == -1.0);
  CHECK(two_point.params[0] == -1.0);
}
