#pragma once

#include "mfg/policy.hpp"

#include <cstdint>
#include <limits>

namespace mfg {

/// Counter-based SplitMix64 stream: output i is mix(key + (i + 1) * golden).
///
/// split(id) derives an independent stream from (key, id) without touching this
/// stream's counter, so query k of a sampler seeded with s always uses split(k)
/// regardless of what happened before. Satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) : key_(mix(seed)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(key_ + (++counter_) * kGolden); }

  Rng split(std::uint64_t id) const { return Rng(key_ ^ mix(id + kGolden)); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  int index(int n);
  /// Inverse-CDF draw from a nonnegative weight vector (need not be normalised).
  int categorical(const Vector& weights);
  /// Flat Dirichlet(1, ..., 1) sample of length n.
  Vector dirichlet(int n);

  std::uint64_t counter() const { return counter_; }

  static std::uint64_t mix(std::uint64_t z) {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Random row-stochastic policy with flat Dirichlet rows.
Policy random_policy(const Shape& shape, Rng& rng);
/// Random deterministic policy.
Policy random_deterministic_policy(const Shape& shape, Rng& rng);

}  // namespace mfg
