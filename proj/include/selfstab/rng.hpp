#pragma once

#include "selfstab/types.hpp"

#include <array>
#include <cstdint>

namespace selfstab {

/// Philox4x32-10 block function (Salmon et al., SC'11).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;
PhiloxCounter philox4x32(PhiloxCounter counter, PhiloxKey key);

/// Maps two 32-bit words to a uniform double in the open interval (0, 1).
double words_to_open_unit(std::uint32_t hi, std::uint32_t lo);

/// Gaussian increments keyed by (seed, trial, particle, step, component).
///
/// Every increment is a pure function of its key, so streams are independent
/// across (trial, particle) pairs and reproducible regardless of how trials are
/// scheduled across workers.
class NoisePlan {
 public:
  NoisePlan(std::uint64_t base_seed, double dt);

  std::uint64_t base_seed() const { return seed_; }
  double dt() const { return dt_; }

  double standard_normal(std::uint64_t trial, std::uint32_t particle, std::uint64_t step,
                         int component) const;

  /// Writes sqrt(dt) * N(0, I) into out (resized to dim).
  void increment(std::uint64_t trial, std::uint32_t particle, std::uint64_t step, int dim,
                 Vec& out) const;

 private:
  std::uint64_t seed_;
  double dt_;
  double sqrt_dt_;
};

/// Sequential counter-based generator for auxiliary randomness (test points,
/// multistart perturbations). Deterministic for a given (seed, stream).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint32_t stream = 0);

  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  std::uint32_t next_word();

 private:
  void refill();

  PhiloxKey key_;
  std::uint32_t stream_;
  std::uint64_t block_ = 0;
  PhiloxCounter buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace selfstab
