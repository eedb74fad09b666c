#include "mfg/rng.hpp"

#include <cmath>

namespace mfg {

int Rng::index(int n) {
  if (n <= 0) throw ConfigError("Rng::index: n must be positive");
  // Multiply-shift reduction; bias is below 2^-32 for the sizes used here.
  const std::uint64_t x = (*this)() >> 32;
  return static_cast<int>((x * static_cast<std::uint64_t>(n)) >> 32);
}

int Rng::categorical(const Vector& weights) {
  const double total = weights.sum();
  if (!(total > 0.0)) throw ConfigError("Rng::categorical: weights must have positive mass");
  const double u = uniform() * total;
  double acc = 0.0;
  int last = 0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights(i) <= 0.0) continue;
    acc += weights(i);
    last = static_cast<int>(i);
    if (u < acc) return last;
  }
  return last;
}

Vector Rng::dirichlet(int n) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = -std::log1p(-uniform());
  const double total = v.sum();
  if (total <= 0.0) return Vector::Constant(n, 1.0 / n);
  return v / total;
}

Policy random_policy(const Shape& shape, Rng& rng) {
  Policy p(shape);
  for (int h = 0; h < shape.horizon; ++h) {
    for (int s = 0; s < shape.states; ++s) {
      p.step(h).row(s) = rng.dirichlet(shape.actions).transpose();
    }
  }
  return p;
}

Policy random_deterministic_policy(const Shape& shape, Rng& rng) {
  Policy p(shape);
  for (int h = 0; h < shape.horizon; ++h) {
    for (int s = 0; s < shape.states; ++s) p.step(h)(s, rng.index(shape.actions)) = 1.0;
  }
  return p;
}

}  // namespace mfg
