#include "selfstab/model.hpp"

#include "selfstab/rng.hpp"
#include "selfstab/sampling.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace selfstab {

namespace {

double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <class F>
double adaptive_simpson(const F& f, double a, double b, double fa, double fm, double fb,
                        double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(a, m, fa, flm, fm);
  const double right = simpson(m, b, fm, frm, fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

std::string format_double(double x) {
  char buffer[64];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, x);
  return std::string(buffer, end);
}

}  // namespace

// ---------------------------------------------------------------------------
// RadialProfile
// ---------------------------------------------------------------------------

RadialProfile::RadialProfile() : coefficients_{0.0} {}

RadialProfile RadialProfile::polynomial(std::vector<double> coefficients) {
  if (coefficients.empty()) coefficients.push_back(0.0);
  RadialProfile p;
  p.coefficients_ = std::move(coefficients);
  return p;
}

RadialProfile RadialProfile::from_expression(expr::Expression e) {
  if (e.variable_count() != 1) {
    throw PreconditionError("radial profile must be an expression in the single variable u");
  }
  RadialProfile p;
  if (auto coefficients = e.polynomial_coefficients()) {
    p.coefficients_ = std::move(*coefficients);
    p.source_ = e.source();
    return p;
  }
  p.coefficients_.clear();
  p.expression_ = std::move(e);
  return p;
}

double RadialProfile::value(double u) const {
  if (expression_) return (*expression_)(std::span<const double>(&u, 1));
  double result = 0.0;
  for (auto it = coefficients_.rbegin(); it != coefficients_.rend(); ++it) result = result * u + *it;
  return result;
}

double RadialProfile::derivative(double u) const {
  if (expression_) return expr::eval_derivative(*expression_, u);
  double result = 0.0;
  for (std::size_t k = coefficients_.size(); k-- > 1;) {
    result = result * u + static_cast<double>(k) * coefficients_[k];
  }
  return result;
}

double RadialProfile::integral(double r) const {
  if (r <= 0.0) return 0.0;
  if (!expression_) {
    double result = 0.0;
    for (std::size_t k = coefficients_.size(); k-- > 0;) {
      result = result * r + coefficients_[k] / static_cast<double>(k + 1);
    }
    return result * r;
  }
  auto f = [this](double u) { return value(u); };
  const double fa = f(0.0);
  const double fm = f(0.5 * r);
  const double fb = f(r);
  return adaptive_simpson(f, 0.0, r, fa, fm, fb, simpson(0.0, r, fa, fm, fb), 1e-10, 50);
}

bool RadialProfile::is_linear() const {
  if (expression_) return false;
  if (coefficients_[0] != 0.0) return false;
  for (std::size_t k = 2; k < coefficients_.size(); ++k) {
    if (coefficients_[k] != 0.0) return false;
  }
  return true;
}

double RadialProfile::linear_slope() const {
  return coefficients_.size() > 1 ? coefficients_[1] : 0.0;
}

bool RadialProfile::is_zero() const {
  if (expression_) return expression_->is_constant() && value(0.0) == 0.0;
  return std::all_of(coefficients_.begin(), coefficients_.end(),
                     [](double c) { return c == 0.0; });
}

std::string RadialProfile::describe() const {
  if (expression_) return "expr:" + expression_->source();
  if (!source_.empty()) return "expr:" + source_;
  std::string out = "poly:";
  for (std::size_t k = 0; k < coefficients_.size(); ++k) {
    out += (k ? "," : "") + format_double(coefficients_[k]);
  }
  return out;
}

RadialProfile RadialProfile::from_description(std::string_view text) {
  if (text.starts_with("expr:")) return parse(text.substr(5));
  if (text.starts_with("poly:")) {
    std::vector<double> coefficients;
    std::string_view rest = text.substr(5);
    while (!rest.empty()) {
      const std::size_t comma = rest.find(',');
      const std::string_view item = rest.substr(0, comma);
      double c = 0.0;
      const auto [end, ec] = std::from_chars(item.data(), item.data() + item.size(), c);
      if (ec != std::errc() || end != item.data() + item.size()) {
        throw PreconditionError("bad polynomial coefficient '" + std::string(item) + "'");
      }
      coefficients.push_back(c);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    return polynomial(std::move(coefficients));
  }
  throw PreconditionError("radial profile description must start with 'poly:' or 'expr:'");
}

// ---------------------------------------------------------------------------
// Interaction
// ---------------------------------------------------------------------------

Vec interaction_force(const RadialProfile& profile, const Vec& z) {
  const double r = z.norm();
  if (r == 0.0) return Vec::Zero(z.size());
  return (profile.value(r) / r) * z;
}

Mat interaction_jacobian(const RadialProfile& profile, const Vec& z) {
  const auto dim = z.size();
  const double r = z.norm();
  if (r < 1e-12) return profile.derivative(0.0) * Mat::Identity(dim, dim);
  const Vec unit = z / r;
  const Mat outer = unit * unit.transpose();
  return (profile.value(r) / r) * (Mat::Identity(dim, dim) - outer) + profile.derivative(r) * outer;
}

double interaction_potential(const ModelSpec& model, const Vec& z) {
  return model.profile().integral(z.norm());
}

// ---------------------------------------------------------------------------
// ModelSpec
// ---------------------------------------------------------------------------

ModelSpec::ModelSpec(int dim, RadialProfile profile, int growth_order,
                     std::optional<int> weight_order)
    : dim_(dim), profile_(std::move(profile)), growth_order_(growth_order) {
  if (dim < 1 || dim > kMaxDim) {
    throw PreconditionError("model dimension must be in [1, " + std::to_string(kMaxDim) + "]");
  }
  if (growth_order < 0) throw PreconditionError("growth order r must be nonnegative");
  weight_order_ = weight_order.value_or(growth_order / 2 + 1);
  if (weight_order_ < 1) throw PreconditionError("weight order q must be positive");
  if (2 * weight_order_ <= growth_order_) {
    throw PreconditionError("weight order q must satisfy 2q > r (q=" +
                            std::to_string(weight_order_) + ", r=" +
                            std::to_string(growth_order_) + ")");
  }
}

ModelSpec ModelSpec::gradient(int dim, expr::Expression potential, RadialProfile profile,
                              int growth_order, std::optional<int> weight_order) {
  ModelSpec m(dim, std::move(profile), growth_order, weight_order);
  if (potential.variable_count() != static_cast<std::size_t>(dim)) {
    throw PreconditionError("potential must be an expression in x1..x" + std::to_string(dim));
  }
  m.potential_ = std::move(potential);
  return m;
}

ModelSpec ModelSpec::from_drift(int dim, std::vector<expr::Expression> components,
                                RadialProfile profile, int growth_order,
                                std::optional<int> weight_order) {
  ModelSpec m(dim, std::move(profile), growth_order, weight_order);
  if (components.size() != static_cast<std::size_t>(dim)) {
    throw PreconditionError("drift needs exactly " + std::to_string(dim) + " component(s)");
  }
  for (const auto& c : components) {
    if (c.variable_count() != static_cast<std::size_t>(dim)) {
      throw PreconditionError("drift components must be expressions in x1..x" +
                              std::to_string(dim));
    }
  }
  m.components_ = std::move(components);
  return m;
}

Vec ModelSpec::drift(const Vec& x) const {
  if (potential_) {
    Vec g;
    expr::eval_gradient(*potential_, x, g);
    return -g;
  }
  Vec v(dim_);
  for (int i = 0; i < dim_; ++i) v(i) = components_[i](x);
  return v;
}

Mat ModelSpec::drift_jacobian(const Vec& x) const {
  if (potential_) return -expr::eval_hessian(*potential_, x);
  Mat jac(dim_, dim_);
  Vec row;
  for (int i = 0; i < dim_; ++i) {
    expr::eval_gradient(components_[i], x, row);
    jac.row(i) = row.transpose();
  }
  return jac;
}

double ModelSpec::potential(const Vec& x) const {
  if (!potential_) throw ModelError("model has no potential (V is not declared as a gradient)");
  return (*potential_)(x);
}

// ---------------------------------------------------------------------------
// Constants and assumption checks
// ---------------------------------------------------------------------------

namespace {

struct EigenSample {
  Vec x;
  double top;
};

std::vector<EigenSample> sample_top_eigenvalues(const ModelSpec& model, const Box& box,
                                                double r0, int n_samples) {
  std::vector<Vec> points;
  points.reserve(n_samples + 300);
  points.push_back(Vec::Zero(model.dim()));
  for (int k = 0; k < n_samples; ++k) points.push_back(halton_point(box, k));
  for (int corner = 0; corner < (1 << model.dim()); ++corner) {
    Vec c(model.dim());
    for (int i = 0; i < model.dim(); ++i) c(i) = (corner >> i) & 1 ? box.hi(i) : box.lo(i);
    points.push_back(c);
  }
  for (const Vec& y : sphere_points(Vec::Zero(model.dim()), r0, 256)) points.push_back(y);

  std::vector<EigenSample> samples;
  samples.reserve(points.size());
  for (Vec& x : points) {
    const double top = max_symmetric_eigenvalue(model.drift_jacobian(x));
    samples.push_back({std::move(x), top});
  }
  return samples;
}

}  // namespace

DissipativityConstants estimate_constants(const ModelSpec& model, const Box& box,
                                          double r0_candidate, int n_samples) {
  if (box.dim() != model.dim()) throw PreconditionError("sampling box dimension mismatch");
  if (!(r0_candidate > 0.0)) throw PreconditionError("r0 must be positive");
  for (int i = 0; i < box.dim(); ++i) {
    if (box.lo(i) > -r0_candidate || box.hi(i) < r0_candidate) {
      throw PreconditionError("sampling box must contain the ball of radius r0 = " +
                              std::to_string(r0_candidate));
    }
  }
  const auto samples = sample_top_eigenvalues(model, box, r0_candidate, n_samples);

  double sup_all = -std::numeric_limits<double>::infinity();
  double sup_far = -std::numeric_limits<double>::infinity();
  std::vector<const EigenSample*> violations;
  for (const auto& s : samples) {
    sup_all = std::max(sup_all, s.top);
    if (s.x.norm() >= r0_candidate * (1.0 - 1e-12)) {
      sup_far = std::max(sup_far, s.top);
      if (s.top >= 0.0) violations.push_back(&s);
    }
  }

  DissipativityConstants c;
  c.k_upper_raw = sup_all;
  c.k_upper = std::max(0.0, sup_all);
  c.k_convex = -sup_far;
  c.r0 = r0_candidate;
  c.sampling_box = box;
  c.n_samples = static_cast<int>(samples.size());

  if (!(c.k_convex > 0.0)) {
    std::sort(violations.begin(), violations.end(),
              [](const EigenSample* a, const EigenSample* b) { return a->top > b->top; });
    std::ostringstream msg;
    msg << "dissipativity violated outside r0 = " << r0_candidate
        << ": top eigenvalue of the symmetrized Jacobian reaches " << sup_far << " at";
    for (std::size_t i = 0; i < std::min<std::size_t>(violations.size(), 8); ++i) {
      msg << ' ' << format_point(violations[i]->x) << " [" << violations[i]->top << ']';
    }
    throw ModelError(msg.str());
  }

  for (const Vec& y : sphere_points(Vec::Zero(model.dim()), r0_candidate, 256)) {
    c.sup_drift_on_r0_sphere = std::max(c.sup_drift_on_r0_sphere, model.drift(y).norm());
  }
  c.eta = c.k_convex / 4.0;
  c.r1 = std::max(2.0 * r0_candidate, 4.0 * c.sup_drift_on_r0_sphere / c.k_convex);
  return c;
}

bool AssumptionReport::all_passed() const {
  return std::all_of(clauses.begin(), clauses.end(),
                     [](const AssumptionClause& c) { return c.passed || !c.required; });
}

const AssumptionClause* AssumptionReport::find(std::string_view name) const {
  for (const auto& c : clauses) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

AssumptionReport check_assumptions(const ModelSpec& model, const Box& box,
                                   const AssumptionTolerances& tol) {
  AssumptionReport report;
  const RadialProfile& phi = model.profile();

  {
    AssumptionClause origin{"profile_origin", std::abs(phi.value(0.0)) <= 1e-12, true, ""};
    origin.detail = "phi(0) = " + format_double(phi.value(0.0));
    report.clauses.push_back(origin);
  }

  {
    // phi is evaluated on every distance the growth check below can produce.
    const double u_max = std::max(1.0, 4.0 * box.diameter());
    AssumptionClause mono{"profile_monotone", true, true, ""};
    double previous = phi.value(0.0);
    for (int k = 0; k <= tol.profile_grid && mono.passed; ++k) {
      const double u = u_max * k / tol.profile_grid;
      const double value = phi.value(u);
      if (value < -1e-12) {
        mono.passed = false;
        mono.detail = "phi(" + format_double(u) + ") = " + format_double(value) + " < 0";
      } else if (value < previous - 1e-12 * (1.0 + std::abs(previous))) {
        mono.passed = false;
        mono.detail = "phi decreases at u = " + format_double(u);
      }
      previous = value;
    }
    if (mono.passed) mono.detail = "nonnegative and nondecreasing on [0, " + format_double(u_max) + "]";
    report.clauses.push_back(mono);
  }

  {
    CounterRng rng(tol.seed, 1);
    const int r = model.growth_order();
    auto needed = [&](const Vec& x, const Vec& y) {
      const double gap = (x - y).norm();
      if (gap == 0.0) return -std::numeric_limits<double>::infinity();
      const double ratio =
          (interaction_force(phi, x) - interaction_force(phi, y)).norm() / gap;
      return ratio - std::pow(x.norm(), r) - std::pow(y.norm(), r);
    };
    auto random_point = [&](const Box& b) {
      Vec x(b.dim());
      for (int i = 0; i < b.dim(); ++i) x(i) = rng.uniform(b.lo(i), b.hi(i));
      return x;
    };
    double fitted = 0.0;
    for (int k = 0; k < tol.growth_pairs; ++k) {
      fitted = std::max(fitted, needed(random_point(box), random_point(box)));
    }
    const Box outer{box.center() + 4.0 * (box.lo - box.center()),
                    box.center() + 4.0 * (box.hi - box.center())};
    double worst = 0.0;
    for (int k = 0; k < tol.growth_pairs; ++k) {
      worst = std::max(worst, needed(random_point(outer), random_point(outer)));
    }
    report.growth_witness = fitted;
    AssumptionClause growth{"polynomial_growth",
                            worst <= fitted * (1.0 + tol.growth_slack) + 1e-9, true, ""};
    growth.detail = "K fitted on box = " + format_double(fitted) +
                    ", required on 4x box = " + format_double(worst) +
                    " (r = " + std::to_string(r) + ")";
    report.clauses.push_back(growth);
  }

  {
    AssumptionClause local{"local_dissipativity", false, true, ""};
    try {
      report.constants = estimate_constants(model, box, tol.r0, tol.n_samples);
      local.passed = true;
      local.detail = "K_V = " + format_double(report.constants->k_convex) + " outside r0 = " +
                     format_double(tol.r0);
    } catch (const Error& e) {
      local.detail = e.what();
    }
    report.clauses.push_back(local);
  }

  {
    const auto samples = sample_top_eigenvalues(model, box, tol.r0, tol.n_samples);
    double sup = -std::numeric_limits<double>::infinity();
    for (const auto& s : samples) sup = std::max(sup, s.top);
    report.global_convexity = sup < 0.0;
    report.global_convexity_constant = -sup;
    AssumptionClause global{"global_convexity", report.global_convexity, false, ""};
    global.detail = "sup of top eigenvalue over box = " + format_double(sup);
    report.clauses.push_back(global);
  }

  if (model.has_potential()) {
    double worst = 0.0;
    Vec grad;
    for (int k = 0; k < 256; ++k) {
      const Vec x = halton_point(box, k);
      expr::eval_gradient(*model.potential_expression(), x, grad);
      worst = std::max(worst, (model.drift(x) + grad).norm());
    }
    report.clauses.push_back({"gradient_consistency", worst <= 1e-10, true,
                              "max |V + grad U| = " + format_double(worst)});
  }
  return report;
}

}  // namespace selfstab
