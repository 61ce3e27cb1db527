#include "selfstab/rng.hpp"

#include <cmath>
#include <numbers>

namespace selfstab {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

PhiloxKey key_from_seed(std::uint64_t seed) {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

void box_muller(double u1, double u2, double& n0, double& n1) {
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  n0 = radius * std::cos(angle);
  n1 = radius * std::sin(angle);
}

}  // namespace

PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

double words_to_open_unit(std::uint32_t hi, std::uint32_t lo) {
  // 52 bits so that (bits + 1/2) * 2^-52 is exact and strictly below 1.
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 12;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

namespace {

// Counter layout: [step low | step high 16 bits << 16 + component pair | particle | trial].
// The upper trial word perturbs the key.
void gaussian_pair(std::uint64_t seed, std::uint64_t trial, std::uint32_t particle,
                   std::uint64_t step, std::uint32_t pair, double& n0, double& n1) {
  const PhiloxCounter counter{static_cast<std::uint32_t>(step),
                              static_cast<std::uint32_t>(((step >> 32) & 0xFFFFu) << 16) | pair,
                              particle, static_cast<std::uint32_t>(trial)};
  PhiloxKey key = key_from_seed(seed);
  key[1] ^= static_cast<std::uint32_t>(trial >> 32);
  const PhiloxCounter words = philox4x32(counter, key);
  box_muller(words_to_open_unit(words[0], words[1]), words_to_open_unit(words[2], words[3]), n0,
             n1);
}

}  // namespace

NoisePlan::NoisePlan(std::uint64_t base_seed, double dt)
    : seed_(base_seed), dt_(dt), sqrt_dt_(std::sqrt(dt)) {
  if (!(dt > 0.0)) throw PreconditionError("NoisePlan: dt must be positive");
}

double NoisePlan::standard_normal(std::uint64_t trial, std::uint32_t particle,
                                  std::uint64_t step, int component) const {
  double n0, n1;
  gaussian_pair(seed_, trial, particle, step, static_cast<std::uint32_t>(component / 2), n0, n1);
  return component % 2 == 0 ? n0 : n1;
}

void NoisePlan::increment(std::uint64_t trial, std::uint32_t particle, std::uint64_t step,
                          int dim, Vec& out) const {
  out.resize(dim);
  for (int pair = 0; pair * 2 < dim; ++pair) {
    double n0, n1;
    gaussian_pair(seed_, trial, particle, step, static_cast<std::uint32_t>(pair), n0, n1);
    out(2 * pair) = sqrt_dt_ * n0;
    if (2 * pair + 1 < dim) out(2 * pair + 1) = sqrt_dt_ * n1;
  }
}

CounterRng::CounterRng(std::uint64_t seed, std::uint32_t stream)
    : key_(key_from_seed(seed)), stream_(stream) {}

void CounterRng::refill() {
  buffer_ = philox4x32({static_cast<std::uint32_t>(block_),
                        static_cast<std::uint32_t>(block_ >> 32), stream_, 0x5eedu},
                       key_);
  ++block_;
  used_ = 0;
}

std::uint32_t CounterRng::next_word() {
  if (used_ == 4) refill();
  return buffer_[used_++];
}

double CounterRng::uniform() {
  const std::uint32_t hi = next_word();
  const std::uint32_t lo = next_word();
  return words_to_open_unit(hi, lo);
}

double CounterRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  double n0, n1;
  box_muller(u1, u2, n0, n1);
  spare_ = n1;
  has_spare_ = true;
  return n0;
}

}  // namespace selfstab
