#pragma once

#include "selfstab/types.hpp"

#include <cstdint>
#include <vector>

namespace selfstab {

double radical_inverse(std::uint64_t index, int base);

/// index-th point of the Halton sequence mapped into the box.
Vec halton_point(const Box& box, std::uint64_t index);

/// Roughly uniform points on the sphere of the given radius about center:
/// the two endpoints in 1D, equally spaced angles in 2D, a Fibonacci lattice in 3D.
std::vector<Vec> sphere_points(const Vec& center, double radius, int n);

/// Largest eigenvalue of (A + A^T) / 2.
double max_symmetric_eigenvalue(const Mat& a);

}  // namespace selfstab
