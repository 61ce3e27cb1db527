#include "selfstab/sampling.hpp"

#include <cmath>
#include <numbers>

namespace selfstab {

double radical_inverse(std::uint64_t index, int base) {
  double result = 0.0;
  double scale = 1.0 / base;
  while (index > 0) {
    result += scale * static_cast<double>(index % base);
    index /= base;
    scale /= base;
  }
  return result;
}

Vec halton_point(const Box& box, std::uint64_t index) {
  static constexpr int kPrimes[kMaxDim] = {2, 3, 5};
  Vec x(box.dim());
  for (int i = 0; i < box.dim(); ++i) {
    x(i) = box.lo(i) + (box.hi(i) - box.lo(i)) * radical_inverse(index + 1, kPrimes[i]);
  }
  return x;
}

std::vector<Vec> sphere_points(const Vec& center, double radius, int n) {
  const int dim = static_cast<int>(center.size());
  std::vector<Vec> points;
  if (dim == 1) {
    points.push_back(center - Vec::Constant(1, radius));
    points.push_back(center + Vec::Constant(1, radius));
    return points;
  }
  points.reserve(n);
  if (dim == 2) {
    for (int k = 0; k < n; ++k) {
      const double angle = 2.0 * std::numbers::pi * k / n;
      points.push_back(center + radius * make_vec({std::cos(angle), std::sin(angle)}));
    }
    return points;
  }
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < n; ++k) {
    const double z = 1.0 - 2.0 * (k + 0.5) / n;
    const double rho = std::sqrt(1.0 - z * z);
    const double angle = golden * k;
    points.push_back(center + radius * make_vec({rho * std::cos(angle), rho * std::sin(angle), z}));
  }
  return points;
}

double max_symmetric_eigenvalue(const Mat& a) {
  if (a.rows() == 1) return a(0, 0);
  const Mat sym = 0.5 * (a + a.transpose());
  if (a.rows() == 2) {
    const double mean = 0.5 * (sym(0, 0) + sym(1, 1));
    const double half_gap = 0.5 * (sym(0, 0) - sym(1, 1));
    return mean + std::hypot(half_gap, sym(0, 1));
  }
  Eigen::SelfAdjointEigenSolver<Mat> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().maxCoeff();
}

}  // namespace selfstab
