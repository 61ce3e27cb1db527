#pragma once

#include "selfstab/expr.hpp"
#include "selfstab/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace selfstab {

/// The radial profile phi of a rotationally invariant interaction
/// Phi(z) = z / |z| * phi(|z|).
///
/// Either a polynomial (closed-form antiderivative) or an expression in `u`
/// (antiderivative by adaptive Simpson quadrature).
class RadialProfile {
 public:
  RadialProfile();  // phi = 0

  static RadialProfile polynomial(std::vector<double> coefficients);
  /// Polynomial expressions are stored by their coefficients.
  static RadialProfile from_expression(expr::Expression e);
  static RadialProfile parse(std::string_view text) {
    return from_expression(expr::parse_profile(text));
  }

  double value(double u) const;
  double derivative(double u) const;
  /// Integral of phi over [0, r].
  double integral(double r) const;

  bool is_polynomial() const { return !expression_.has_value(); }
  /// True when phi(u) = c * u exactly (polynomial form only).
  bool is_linear() const;
  double linear_slope() const;
  bool is_zero() const;

  const std::vector<double>& coefficients() const { return coefficients_; }
  /// "poly:c0,c1,..." or "expr:<source>"; accepted back by from_description.
  std::string describe() const;
  static RadialProfile from_description(std::string_view text);

 private:
  std::vector<double> coefficients_;
  std::optional<expr::Expression> expression_;
  std::string source_;  // original text of a polynomial given as an expression
};

/// Phi(z) for the given profile; zero at the origin.
Vec interaction_force(const RadialProfile& profile, const Vec& z);
/// D Phi(z).
Mat interaction_jacobian(const RadialProfile& profile, const Vec& z);

/// One problem instance: the confining field V (optionally V = -grad U) and
/// the interaction profile, plus the growth bookkeeping r and q.
class ModelSpec {
 public:
  /// Gradient case: V = -grad U with U given as an expression in x1..xd.
  static ModelSpec gradient(int dim, expr::Expression potential, RadialProfile profile,
                            int growth_order = 1, std::optional<int> weight_order = {});

  /// General case: V given componentwise.
  static ModelSpec from_drift(int dim, std::vector<expr::Expression> components,
                              RadialProfile profile, int growth_order = 1,
                              std::optional<int> weight_order = {});

  int dim() const { return dim_; }
  Vec drift(const Vec& x) const;
  Mat drift_jacobian(const Vec& x) const;

  bool has_potential() const { return potential_.has_value(); }
  double potential(const Vec& x) const;
  const std::optional<expr::Expression>& potential_expression() const { return potential_; }
  const std::vector<expr::Expression>& drift_expressions() const { return components_; }

  const RadialProfile& profile() const { return profile_; }
  int growth_order() const { return growth_order_; }
  int weight_order() const { return weight_order_; }

 private:
  ModelSpec(int dim, RadialProfile profile, int growth_order, std::optional<int> weight_order);

  int dim_;
  std::optional<expr::Expression> potential_;
  std::vector<expr::Expression> components_;
  RadialProfile profile_;
  int growth_order_;
  int weight_order_;
};

inline Vec interaction_force(const ModelSpec& model, const Vec& z) {
  return interaction_force(model.profile(), z);
}

/// A(z) = integral of phi over [0, |z|]; Phi = grad A.
double interaction_potential(const ModelSpec& model, const Vec& z);

struct DissipativityConstants {
  double k_upper = 0.0;      // K, clamped at zero
  double k_upper_raw = 0.0;  // unclamped supremum
  double k_convex = 0.0;     // K_V
  double eta = 0.0;
  double r0 = 0.0;
  double r1 = 0.0;
  double sup_drift_on_r0_sphere = 0.0;
  Box sampling_box;
  int n_samples = 0;
};

/// Estimates the one-sided Lipschitz constant K and the convexity-at-infinity
/// constant K_V by maximizing the top eigenvalue of the symmetrized Jacobian
/// over a Halton sample of the box; derives eta and R1 from them.
///
/// Throws ModelError, listing offending points, when K_V <= 0 on the box.
DissipativityConstants estimate_constants(const ModelSpec& model, const Box& box,
                                          double r0_candidate = 1.0, int n_samples = 4096);

struct AssumptionTolerances {
  double r0 = 1.0;
  int n_samples = 4096;
  int profile_grid = 1001;
  int growth_pairs = 2000;
  double growth_slack = 0.1;
  std::uint64_t seed = 7;
};

struct AssumptionClause {
  std::string name;
  bool passed = false;
  bool required = true;
  std::string detail;
};

struct AssumptionReport {
  std::vector<AssumptionClause> clauses;
  bool global_convexity = false;
  double global_convexity_constant = 0.0;  // -sup of the top eigenvalue over the whole box
  double growth_witness = 0.0;             // fitted K of the polynomial growth bound
  std::optional<DissipativityConstants> constants;

  bool all_passed() const;
  const AssumptionClause* find(std::string_view name) const;
};

AssumptionReport check_assumptions(const ModelSpec& model, const Box& box,
                                   const AssumptionTolerances& tolerances = {});

}  // namespace selfstab
