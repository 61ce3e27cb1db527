#include "selfstab/ldp.hpp"

#include "selfstab/rng.hpp"

#include <Eigen/SparseLU>
#include <ceres/ceres.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace selfstab {

std::string to_string(ActionVariant variant) {
  switch (variant) {
    case ActionVariant::kClassical:
      return "classical";
    case ActionVariant::kLimiting:
      return "limiting";
    case ActionVariant::kTracking:
      return "tracking";
  }
  return "?";
}

ActionSpec ActionSpec::classical(ModelSpec model) {
  return ActionSpec{std::move(model), ActionVariant::kClassical, Vec(), 0.0, Vec(), nullptr};
}

ActionSpec ActionSpec::limiting(ModelSpec model, Vec x_stable) {
  if (x_stable.size() != model.dim()) throw PreconditionError("x_stable dimension mismatch");
  return ActionSpec{std::move(model), ActionVariant::kLimiting, std::move(x_stable), 0.0, Vec(),
                    nullptr};
}

ActionSpec ActionSpec::tracking(ModelSpec model, Vec x0, double offset, double horizon, double dt) {
  if (x0.size() != model.dim()) throw PreconditionError("x0 dimension mismatch");
  auto flow = std::make_shared<const PathSample>(integrate_flow(model, x0, offset + horizon, dt));
  return ActionSpec{std::move(model), ActionVariant::kTracking, Vec(), offset, std::move(x0),
                    std::move(flow)};
}

Vec ActionSpec::drift(double t, const Vec& x) const {
  switch (variant) {
    case ActionVariant::kClassical:
      return model.drift(x);
    case ActionVariant::kLimiting:
      return model.drift(x) - interaction_force(model, Vec(x - x_stable));
    case ActionVariant::kTracking:
      return model.drift(x) - interaction_force(model, Vec(x - flow->at(t + offset)));
  }
  return Vec();
}

Mat ActionSpec::drift_jacobian(double t, const Vec& x) const {
  switch (variant) {
    case ActionVariant::kClassical:
      return model.drift_jacobian(x);
    case ActionVariant::kLimiting:
      return model.drift_jacobian(x) - interaction_jacobian(model.profile(), x - x_stable);
    case ActionVariant::kTracking:
      return model.drift_jacobian(x) - interaction_jacobian(model.profile(), x - flow->at(t + offset));
  }
  return Mat();
}

const Vec& DiscretePath::node(int k) const {
  if (k == 0) return y;
  if (k == intervals()) return z;
  return interior[k - 1];
}

DiscretePath DiscretePath::straight(const Vec& y, const Vec& z, double horizon, int n) {
  if (n < 2) throw PreconditionError("a discrete path needs n >= 2 intervals");
  if (!(horizon > 0)) throw PreconditionError("path horizon must be positive");
  DiscretePath p{y, z, {}, horizon};
  p.interior.reserve(n - 1);
  for (int k = 1; k < n; ++k) p.interior.push_back(y + (z - y) * (static_cast<double>(k) / n));
  return p;
}

PathSample DiscretePath::to_path_sample() const {
  PathSample s;
  s.dt = step();
  for (int k = 0; k <= intervals(); ++k) s.states.push_back(node(k));
  return s;
}

namespace {

// Action and, optionally, its gradient over interior nodes stored flat.
double evaluate_action(const ActionSpec& spec, const DiscretePath& path, double* gradient) {
  const int n = path.intervals();
  const int d = static_cast<int>(path.y.size());
  const double h = path.step();
  double total = 0.0;
  Vec r_prev;
  Mat j_prev;
  for (int k = 0; k < n; ++k) {
    const Vec& a = path.node(k);
    const Vec& b = path.node(k + 1);
    const Vec mid = 0.5 * (a + b);
    const double t = (k + 0.5) * h;
    const Vec r = (b - a) / h - spec.drift(t, mid);
    total += 0.5 * r.squaredNorm() * h;
    if (!gradient) continue;
    const Mat jac = spec.drift_jacobian(t, mid);
    // Interval k touches interior nodes k (as its right end) and k + 1 (left end).
    if (k >= 1) {
      const Vec g = r_prev - r - 0.5 * h * (j_prev.transpose() * r_prev + jac.transpose() * r);
      std::copy(g.data(), g.data() + d, gradient + (k - 1) * d);
    }
    r_prev = r;
    j_prev = jac;
  }
  return total;
}

DiscretePath with_interior(const DiscretePath& shape, const double* flat) {
  DiscretePath p = shape;
  const int d = static_cast<int>(shape.y.size());
  for (std::size_t k = 0; k < p.interior.size(); ++k) {
    p.interior[k] = Eigen::Map<const Vec>(flat + k * d, d);
  }
  return p;
}

class ActionFunction final : public ceres::FirstOrderFunction {
 public:
  ActionFunction(const ActionSpec& spec, DiscretePath shape)
      : spec_(spec), shape_(std::move(shape)) {}

  bool Evaluate(const double* parameters, double* cost, double* gradient) const override {
    const DiscretePath p = with_interior(shape_, parameters);
    *cost = evaluate_action(spec_, p, gradient);
    return std::isfinite(*cost);
  }

  int NumParameters() const override {
    return static_cast<int>(shape_.interior.size() * shape_.y.size());
  }

 private:
  const ActionSpec& spec_;
  DiscretePath shape_;
};

double max_abs(const std::vector<Vec>& g) {
  double m = 0.0;
  for (const Vec& v : g) m = std::max(m, v.cwiseAbs().maxCoeff());
  return m;
}

// Newton steps on the gradient. The Hessian is block tridiagonal: perturbing
// every third node at once and differencing the exact gradient recovers it
// with 6 d gradient evaluations. Steps are kept only while the gradient
// max-norm shrinks, which is the useful merit once cost changes sink below
// rounding.
void newton_polish(const ActionSpec& spec, std::vector<double>& x, const DiscretePath& shape,
                   double tol, int max_steps = 20) {
  const int d = static_cast<int>(shape.y.size());
  const int m = static_cast<int>(x.size());
  const int nodes = m / d;
  std::vector<double> g(m), gp(m), gm(m);
  auto grad = [&](const std::vector<double>& at, std::vector<double>& out) {
    return evaluate_action(spec, with_interior(shape, at.data()), out.data());
  };
  auto norm_inf = [](const std::vector<double>& v) {
    double r = 0.0;
    for (double e : v) r = std::max(r, std::abs(e));
    return r;
  };
  grad(x, g);
  double gnorm = norm_inf(g);
  for (int step = 0; step < max_steps && gnorm > tol; ++step) {
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(3 * d) * m);
    for (int cls = 0; cls < 3; ++cls) {
      for (int c = 0; c < d; ++c) {
        std::vector<double> xp = x, xm = x;
        std::vector<double> delta(nodes, 0.0);
        for (int k = cls; k < nodes; k += 3) {
          delta[k] = 1e-6 * std::max(1.0, std::abs(x[k * d + c]));
          xp[k * d + c] += delta[k];
          xm[k * d + c] -= delta[k];
        }
        grad(xp, gp);
        grad(xm, gm);
        for (int row = 0; row < nodes; ++row) {
          // The one perturbed node in this class that couples to `row`.
          for (int k = std::max(0, row - 1); k <= std::min(nodes - 1, row + 1); ++k) {
            if (k % 3 != cls) continue;
            for (int r = 0; r < d; ++r) {
              entries.emplace_back(row * d + r, k * d + c,
                                   (gp[row * d + r] - gm[row * d + r]) / (2 * delta[k]));
            }
          }
        }
      }
    }
    Eigen::SparseMatrix<double> hess(m, m);
    hess.setFromTriplets(entries.begin(), entries.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(hess);
    if (lu.info() != Eigen::Success) return;
    const Eigen::VectorXd dx = lu.solve(Eigen::Map<const Eigen::VectorXd>(g.data(), m));
    if (lu.info() != Eigen::Success || !dx.allFinite()) return;
    std::vector<double> trial = x;
    for (int i = 0; i < m; ++i) trial[i] -= dx(i);
    std::vector<double> gt(m);
    grad(trial, gt);
    const double tnorm = norm_inf(gt);
    if (!(tnorm < gnorm)) return;
    x.swap(trial);
    g.swap(gt);
    gnorm = tnorm;
  }
}

CostResult run_lbfgs(const ActionSpec& spec, DiscretePath start, const MinimizeOptions& options) {
  const int d = static_cast<int>(start.y.size());
  std::vector<double> x(start.interior.size() * d);
  for (std::size_t k = 0; k < start.interior.size(); ++k) {
    std::copy(start.interior[k].data(), start.interior[k].data() + d, x.data() + k * d);
  }
  CostResult out;
  if (!x.empty()) {
    ceres::GradientProblem problem(new ActionFunction(spec, start));
    ceres::GradientProblemSolver::Options o;
    o.line_search_direction_type = ceres::LBFGS;
    o.max_lbfgs_rank = options.lbfgs_rank;
    o.max_num_iterations = options.max_iterations;
    o.gradient_tolerance = options.gradient_tol;
    o.function_tolerance = 1e-16;
    o.parameter_tolerance = 1e-16;
    o.logging_type = ceres::SILENT;
    ceres::GradientProblemSolver::Summary summary;
    ceres::Solve(o, problem, x.data(), &summary);
    out.iterations = static_cast<int>(summary.iterations.size());
    newton_polish(spec, x, start, options.gradient_tol);
  }
  out.path = with_interior(start, x.data());
  out.value = action(spec, out.path);
  out.gradient_norm = max_abs(action_gradient(spec, out.path));
  out.converged = out.gradient_norm <= options.gradient_tol;
  return out;
}

}  // namespace

double action(const ActionSpec& spec, const DiscretePath& path) {
  return evaluate_action(spec, path, nullptr);
}

std::vector<Vec> action_gradient(const ActionSpec& spec, const DiscretePath& path) {
  const int d = static_cast<int>(path.y.size());
  std::vector<double> flat(path.interior.size() * d);
  evaluate_action(spec, path, flat.data());
  std::vector<Vec> g;
  g.reserve(path.interior.size());
  for (std::size_t k = 0; k < path.interior.size(); ++k) g.emplace_back(Eigen::Map<const Vec>(flat.data() + k * d, d));
  return g;
}

CostResult minimize_cost(const ActionSpec& spec, const Vec& y, const Vec& z, double horizon,
                         int n_nodes, const MinimizeOptions& options,
                         const std::optional<DiscretePath>& initial) {
  if (n_nodes < 8) throw PreconditionError("minimize_cost needs n_nodes >= 8");
  if (!(horizon > 0)) throw PreconditionError("minimize_cost needs T > 0");
  if (y.size() != spec.model.dim() || z.size() != spec.model.dim()) {
    throw PreconditionError("endpoint dimension mismatch");
  }
  DiscretePath base = DiscretePath::straight(y, z, horizon, n_nodes);
  if (initial) {
    if (initial->intervals() != n_nodes) throw PreconditionError("initial path has the wrong node count");
    base.interior = initial->interior;
  }
  CostResult best = run_lbfgs(spec, base, options);
  const double scale = options.perturbation * (z - y).norm();
  if (scale > 0) {
    for (int s = 0; s < options.multistart; ++s) {
      CounterRng rng(options.seed, static_cast<std::uint32_t>(s));
      DiscretePath start = base;
      for (Vec& v : start.interior) {
        for (Eigen::Index c = 0; c < v.size(); ++c) v(c) += scale * rng.normal();
      }
      CostResult r = run_lbfgs(spec, start, options);
      if (r.value < best.value) best = std::move(r);
    }
  }
  return best;
}

std::vector<double> geometric_grid(double lo, double hi, int count) {
  if (!(lo > 0) || !(hi >= lo) || count < 1) throw PreconditionError("bad geometric grid");
  std::vector<double> g;
  for (int i = 0; i < count; ++i) {
    g.push_back(count == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1)));
  }
  g.back() = hi;
  return g;
}

QuasipotentialResult quasipotential_numeric(const ActionSpec& spec, const Vec& y, const Vec& z,
                                            const std::vector<double>& horizons, int n_nodes,
                                            const QuasipotentialOptions& options) {
  if (horizons.empty()) throw PreconditionError("T grid must be nonempty");
  for (std::size_t i = 1; i < horizons.size(); ++i) {
    if (!(horizons[i] > horizons[i - 1])) throw PreconditionError("T grid must be increasing");
  }
  QuasipotentialResult result;
  if ((y - z).norm() == 0.0) {
    // Q(y, y) = 0, the infimum as T -> 0.
    result.best_horizon = 0.0;
    result.path = DiscretePath::straight(y, z, horizons.front(), n_nodes);
    return result;
  }
  MinimizeOptions single = options.minimize;
  single.multistart = 0;

  std::optional<DiscretePath> warm;
  std::vector<CostResult> costs;
  for (double T : horizons) {
    costs.push_back(minimize_cost(spec, y, z, T, n_nodes, single, warm));
    warm = costs.back().path;
    result.evaluations.emplace_back(T, costs.back().value);
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < costs.size(); ++i) {
    if (costs[i].value < costs[best].value) best = i;
  }
  double best_T = horizons[best];
  CostResult best_cost = costs[best];

  if (horizons.size() > 1) {
    // Golden section in log T over the bracket around the best grid value.
    double a = std::log(horizons[best == 0 ? 0 : best - 1]);
    double b = std::log(horizons[std::min(best + 1, horizons.size() - 1)]);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    auto eval = [&](double logT) {
      const double T = std::exp(logT);
      CostResult r = minimize_cost(spec, y, z, T, n_nodes, single, best_cost.path);
      result.evaluations.emplace_back(T, r.value);
      if (r.value < best_cost.value) {
        best_cost = r;
        best_T = T;
      }
      return r.value;
    };
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = eval(c);
    double fd = eval(d);
    for (int it = 0; it < options.golden_iterations; ++it) {
      if (fc < fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - inv_phi * (b - a);
        fc = eval(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + inv_phi * (b - a);
        fd = eval(d);
      }
    }
  }

  // Multistart at the best horizon, from the best path found so far.
  if (options.minimize.multistart > 0) {
    CostResult r = minimize_cost(spec, y, z, best_T, n_nodes, options.minimize, best_cost.path);
    result.evaluations.emplace_back(best_T, r.value);
    if (r.value < best_cost.value) best_cost = std::move(r);
  }
  result.value = best_cost.value;
  result.best_horizon = best_T;
  result.path = best_cost.path;
  result.interior_minimum = best_T < horizons.back() * (1 - 1e-9);
  std::sort(result.evaluations.begin(), result.evaluations.end());
  return result;
}

double quasipotential_closed_form(const ModelSpec& model, const Vec& x_stable, const Vec& z,
                                  ActionVariant variant) {
  if (!model.has_potential()) {
    throw ModelError("the closed-form quasi-potential needs a gradient model (V = -grad U)");
  }
  if (variant == ActionVariant::kTracking) {
    throw PreconditionError("the closed form covers the classical and limiting variants only");
  }
  double q = model.potential(z) - model.potential(x_stable);
  if (variant == ActionVariant::kLimiting) q += interaction_potential(model, z - x_stable);
  return 2.0 * q;
}

BoundaryMinimum boundary_min(const std::function<double(const Vec&)>& evaluate,
                             const Domain& domain, int n_scan, double param_tol,
                             double value_tol) {
  BoundaryMinimum out;
  struct Candidate {
    double param;
    Vec point;
    double value;
  };
  std::vector<Candidate> candidates;
  const auto range = domain.param_range();
  if (!range) {
    // Discrete boundary scan: interval endpoints, 3D sphere or implicit samples.
    for (const Vec& p : domain.boundary_samples(n_scan)) {
      const double v = evaluate(p);
      out.scan.emplace_back(domain.boundary_param(p), v);
      candidates.push_back({domain.boundary_param(p), p, v});
    }
  } else {
    const auto [lo, hi] = *range;
    const double width = hi - lo;
    std::vector<double> values(n_scan);
    auto param_at = [&](int i) { return lo + width * i / n_scan; };
    for (int i = 0; i < n_scan; ++i) {
      values[i] = evaluate(domain.boundary_point(param_at(i)));
      out.scan.emplace_back(param_at(i), values[i]);
    }
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int i = 0; i < n_scan; ++i) {
      const double left = values[(i + n_scan - 1) % n_scan];
      const double right = values[(i + 1) % n_scan];
      if (values[i] > left || values[i] > right) continue;
      // Golden section on the periodic bracket [theta_{i-1}, theta_{i+1}].
      double a = param_at(i) - width / n_scan;
      double b = param_at(i) + width / n_scan;
      auto f = [&](double th) { return evaluate(domain.boundary_point(th)); };
      double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
      double fc = f(c), fd = f(d);
      while (b - a > param_tol) {
        if (fc < fd) {
          b = d;
          d = c;
          fd = fc;
          c = b - inv_phi * (b - a);
          fc = f(c);
        } else {
          a = c;
          c = d;
          fc = fd;
          d = a + inv_phi * (b - a);
          fd = f(d);
        }
        if (b - a < 1e-15 * std::max(1.0, std::abs(a))) break;
      }
      double th = 0.5 * (a + b);
      double v = f(th);
      if (values[i] < v) {
        th = param_at(i);
        v = values[i];
      }
      // Wrap into [lo, hi).
      th = lo + std::fmod(std::fmod(th - lo, width) + width, width);
      candidates.push_back({th, domain.boundary_point(th), v});
    }
  }
  if (candidates.empty()) throw PreconditionError("boundary scan produced no candidates");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) best = std::min(best, c.value);
  out.value = best;
  const double threshold = best + value_tol * std::max(1.0, std::abs(best));
  for (const auto& c : candidates) {
    if (c.value > threshold) continue;
    bool duplicate = false;
    for (const Vec& p : out.argmins) duplicate = duplicate || (p - c.point).norm() < 1e-6;
    if (duplicate) continue;
    out.argmins.push_back(c.point);
    out.params.push_back(c.param);
  }
  return out;
}

}  // namespace selfstab
