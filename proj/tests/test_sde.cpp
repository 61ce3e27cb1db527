#include "doctest.h"

#include "selfstab/sde.hpp"

#include <cmath>

using namespace selfstab;

namespace {

ModelSpec ou_model(double slope = 1.0) {
  return ModelSpec::gradient(1, expr::parse("0.5*x1^2", 1), RadialProfile::polynomial({0.0, slope}));
}

ModelSpec planar() {
  return ModelSpec::gradient(2, expr::parse("6*x1^2 + 0.5*x2^2", 2), RadialProfile::parse("4*u"));
}

// b(t, x) = x - exp(-t), the exact self-consistent drift of the OU oracle.
std::shared_ptr<const DriftField> ou_exact(double horizon) {
  DriftGrid g;
  g.horizon = horizon;
  g.time_steps = static_cast<int>(std::lround(horizon / 0.01));
  g.box = Box::cube(1, 3.0);
  g.nodes = {61};
  auto f = std::make_shared<DriftField>(g, RadialProfile::polynomial({0.0, 1.0}), 1);
  for (int k = 0; k < f->time_count(); ++k) {
    const double m = std::exp(-f->time(k));
    f->set_ensemble_mean(k, make_vec({m}));
    for (int n = 0; n < f->node_count(); ++n) f->set_value(k, n, make_vec({f->node(n)(0) - m}));
  }
  return f;
}

PathSample ou_mean_path(double horizon, double dt) {
  PathSample ref;
  ref.dt = dt;
  for (std::size_t k = 0; k <= step_count(horizon, dt); ++k) ref.states.push_back(make_vec({std::exp(-ref.time(k))}));
  return ref;
}

}  // namespace

TEST_CASE("particle mode with N = 1 reproduces classical paths") {
  const auto model = planar();
  const NoisePlan noise(77, 1e-3);
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    const auto a = simulate(model, SimulationMode::classical(), make_vec({0.3, -0.5}), 0.2, 1.0, noise, trial);
    const auto b = simulate(model, SimulationMode::particle(1), make_vec({0.3, -0.5}), 0.2, 1.0, noise, trial);
    REQUIRE(b.size() == 1);
    double worst = 0;
    for (std::size_t k = 0; k < a[0].states.size(); ++k) {
      worst = std::max(worst, (a[0].states[k] - b[0].states[k]).cwiseAbs().maxCoeff());
    }
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("zero noise follows the deterministic flows") {
  const NoisePlan noise(1, 1e-3);
  const auto classical = simulate(planar(), SimulationMode::classical(), make_vec({1.0, 1.0}), 0.0, 1.0, noise, 0);
  const auto rk4 = integrate_flow(planar(), make_vec({1.0, 1.0}), 1.0, 1e-3);
  CHECK((classical[0].final_state() - rk4.final_state()).norm() <= 1e-3);

  const auto limiting = simulate(ou_model(), SimulationMode::limiting(Vec::Zero(1)), make_vec({1.0}), 0.0, 1.0, noise, 0);
  for (std::size_t k = 0; k < limiting[0].states.size(); k += 100) {
    CHECK(std::abs(limiting[0].states[k](0) - std::exp(-2.0 * limiting[0].time(k))) <= 1e-3);
  }

  // Tracking the flow from x0 = x_init reproduces psi itself: x' = -x - (x - e^{-t}).
  const auto mode = SimulationMode::tracking(ou_model(), make_vec({1.0}), 0.0, 1.0);
  const auto tracking = simulate(ou_model(), mode, make_vec({1.0}), 0.0, 1.0, noise, 0);
  CHECK(std::abs(tracking[0].final_state()(0) - std::exp(-1.0)) <= 1e-3);

  const auto frozen = simulate(ou_model(), SimulationMode::frozen(ou_exact(1.0)), make_vec({1.0}), 0.0, 1.0, noise, 0);
  CHECK(std::abs(frozen[0].final_state()(0) - std::exp(-1.0)) <= 1e-3);
}

TEST_CASE("mode preconditions") {
  const NoisePlan noise(1, 1e-2);
  CHECK_THROWS_AS(simulate(ou_model(), SimulationMode::frozen(ou_exact(1.0), 0.5), make_vec({1.0}), 0.1, 1.0, noise, 0),
                  PreconditionError);
  CHECK_THROWS_AS(simulate(ou_model(), SimulationMode::particle(0), make_vec({1.0}), 0.1, 1.0, noise, 0),
                  PreconditionError);
  CHECK_THROWS_AS(simulate(ou_model(), SimulationMode::limiting(Vec()), make_vec({1.0}), 0.1, 1.0, noise, 0),
                  PreconditionError);
  CHECK_THROWS_AS(simulate(ou_model(), SimulationMode::classical(), make_vec({1.0}), -0.1, 1.0, noise, 0),
                  PreconditionError);
  CHECK(mode_from_string("limiting") == ModeKind::kLimiting);
  CHECK_THROWS_AS(mode_from_string("other"), PreconditionError);

  const auto expansive = ModelSpec::from_drift(1, {expr::parse("x1^3", 1)}, RadialProfile());
  CHECK_THROWS_AS(simulate(expansive, SimulationMode::classical(), make_vec({3.0}), 0.1, 10.0, noise, 0),
                  DivergenceError);
}

TEST_CASE("seed determinism regardless of invocation order") {
  const NoisePlan noise(5, 1e-2);
  const auto model = ModelSpec::gradient(2, expr::parse("x1^4/4 + x2^2", 2), RadialProfile::parse("u + u^3"));
  const auto a = simulate(model, SimulationMode::particle(5), make_vec({0.1, 0.2}), 0.3, 1.0, noise, 9);
  simulate(model, SimulationMode::particle(5), make_vec({0.1, 0.2}), 0.3, 1.0, noise, 4);
  const auto b = simulate(model, SimulationMode::particle(5), make_vec({0.1, 0.2}), 0.3, 1.0, noise, 9);
  for (std::size_t p = 0; p < a.size(); ++p) CHECK(a[p].states == b[p].states);
  const auto c = simulate(model, SimulationMode::particle(5), make_vec({0.1, 0.2}), 0.3, 1.0, noise, 10);
  CHECK(a[0].states != c[0].states);
}

TEST_CASE("empirical_moment examples and the OU variance") {
  const auto ref = ou_mean_path(2.0, 1e-2);
  const auto same = empirical_moment({ref, ref}, ref, 2);
  for (double m : same.mean) CHECK(m == 0.0);
  CHECK_THROWS_AS(empirical_moment({ref}, ou_mean_path(1.0, 1e-2), 2), PreconditionError);
  CHECK_THROWS_AS(empirical_moment({ref}, ref, 3), PreconditionError);

  const double eps = 0.1;
  const NoisePlan noise(11, 1e-2);
  const auto mode = SimulationMode::frozen(ou_exact(2.0));
  std::vector<PathSample> paths;
  for (std::uint64_t j = 0; j < 2000; ++j) {
    paths.push_back(simulate(ou_model(), mode, make_vec({1.0}), eps, 2.0, noise, j)[0]);
  }
  const auto curve = empirical_moment(paths, ref, 2);
  CHECK(curve.mean.front() == 0.0);
  const double exact = eps / 4 * (1 - std::exp(-8.0));
  // Euler bias of the stationary variance is about a dt / 2 relative, a = 2.
  CHECK(std::abs(curve.mean.back() - exact) <= 3 * curve.stderr_.back() + exact * 1e-2);

  DissipativityConstants c;
  c.k_upper = 0.0;
  c.k_convex = 1.0;
  const auto report = moment_bound_check(c, curve, eps, 1, true);
  CHECK(report.passed);
  CHECK(report.uniform_bound == doctest::Approx(0.05));

  MomentCurve zero{{0.0, 1.0}, {0.0, 0.0}, {0.0, 0.0}};
  CHECK(moment_bound_check(c, zero, 0.0, 1, true).passed);
  MomentCurve too_big{{0.0, 1.0}, {0.0, 0.2}, {0.0, 0.001}};
  const auto bad = moment_bound_check(c, too_big, eps, 1, true);
  CHECK_FALSE(bad.passed);
  CHECK(bad.violation_times == std::vector<double>{1.0});
}

TEST_CASE("weak convergence: halving dt moves the second moment by O(dt)") {
  const double eps = 0.1;
  const double exact = eps / 4 * (1 - std::exp(-4.0));
  const auto mode = SimulationMode::limiting(Vec::Zero(1));
  for (double dt : {0.04, 0.02}) {
    const NoisePlan noise(21, dt);
    double sum = 0, sum_sq = 0;
    const int M = 4000;
    for (int j = 0; j < M; ++j) {
      // Limiting mode around 0 with x0 = 0: the same linear rate 2.
      const double x = simulate(ou_model(), mode, Vec::Zero(1), eps, 1.0, noise, j)[0].final_state()(0);
      sum += x * x;
      sum_sq += x * x * x * x;
    }
    const double m = sum / M;
    const double se = std::sqrt((sum_sq / M - m * m) / M);
    CHECK(std::abs(m - exact) <= 3 * se + exact * 2.0 * dt);
  }
}

TEST_CASE("propagation of chaos: particle system vs frozen self-consistent drift") {
  const auto model = ou_model();
  const double eps = 0.1;
  const int N = 2000;
  const NoisePlan noise(31, 1e-2);
  const auto particles = simulate(model, SimulationMode::particle(N), make_vec({1.0}), eps, 1.0, noise, 0);
  const auto frozen_mode = SimulationMode::frozen(ou_exact(1.0));
  auto stats = [](const std::vector<double>& xs) {
    double m = 0, v = 0;
    for (double x : xs) m += x;
    m /= xs.size();
    for (double x : xs) v += (x - m) * (x - m);
    return std::pair{m, v / (xs.size() - 1)};
  };
  std::vector<double> a, b;
  for (const auto& p : particles) a.push_back(p.final_state()(0));
  for (int j = 0; j < N; ++j) {
    b.push_back(simulate(model, frozen_mode, make_vec({1.0}), eps, 1.0, noise, 100000 + j)[0].final_state()(0));
  }
  const auto [ma, va] = stats(a);
  const auto [mb, vb] = stats(b);
  CHECK(std::abs(ma - mb) <= 3 * std::sqrt(va / N + vb / N));
  CHECK(std::abs(va - vb) <= 3 * std::sqrt(2.0 / (N - 1)) * std::sqrt(va * va + vb * vb));
}
