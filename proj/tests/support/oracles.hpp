#pragma once

// Brute-force reference computations used by the tests. They only call the model's
// pointwise transition/reward evaluators and never the library's DP or freezing code.

#include "mfg/model.hpp"
#include "mfg/policy.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

using mfg::MeanFieldModel;
using mfg::Policy;
using mfg::Shape;
using mfg::Vector;

/// mu_{h+1}(s') = sum_{s,a} mu_h(s) pi(a|s) P(s'|s,a,mu_h), by explicit loops.
inline std::vector<Vector> flow(const MeanFieldModel& m, const Policy& pi) {
  const Shape shape = m.shape();
  std::vector<Vector> mus{m.initial()};
  for (int h = 0; h + 1 < shape.horizon; ++h) {
    Vector next = Vector::Zero(shape.states);
    for (int s = 0; s < shape.states; ++s) {
      for (int a = 0; a < shape.actions; ++a) {
        const double w = mus[h](s) * pi(h, s, a);
        if (w == 0.0) continue;
        const Vector p = m.transition(h, s, a, mus[h]);
        for (int t = 0; t < shape.states; ++t) next(t) += w * p(t);
      }
    }
    mus.push_back(next);
  }
  return mus;
}

/// Visits every (s_1, a_1, ..., s_H, a_H) path with positive probability under `eval`,
/// with dynamics given by `step_prob(h, s, a, s')`. `on_step(h, s, a, prob)` receives the
/// probability of reaching (s_h, a_h) along the current path prefix.
inline void enumerate_paths(const Shape& shape, const Vector& initial, const Policy& eval,
                            const std::function<double(int, int, int, int)>& step_prob,
                            const std::function<void(int, int, int, double)>& on_step) {
  std::function<void(int, int, double)> rec = [&](int h, int s, double prob) {
    for (int a = 0; a < shape.actions; ++a) {
      const double pa = prob * eval(h, s, a);
      if (pa == 0.0) continue;
      on_step(h, s, a, pa);
      if (h + 1 == shape.horizon) continue;
      for (int t = 0; t < shape.states; ++t) {
        const double pt = step_prob(h, s, a, t);
        if (pt != 0.0) rec(h + 1, t, pa * pt);
      }
    }
  };
  for (int s = 0; s < shape.states; ++s) {
    if (initial(s) > 0.0) rec(0, s, initial(s));
  }
}

/// J(eval; ref) by path enumeration, every kernel and reward evaluated at ref's flow.
inline double path_return(const MeanFieldModel& m, const Policy& eval, const Policy& ref) {
  const auto mus = flow(m, ref);
  double total = 0.0;
  enumerate_paths(
      m.shape(), m.initial(), eval,
      [&](int h, int s, int a, int t) { return m.transition(h, s, a, mus[h])(t); },
      [&](int h, int s, int a, double p) { total += p * m.reward(h, s, a, mus[h]); });
  return total;
}

/// All A^(S H) deterministic policies.
inline std::vector<Policy> all_deterministic(const Shape& shape) {
  const int slots = shape.horizon * shape.states;
  std::vector<int> digits(slots, 0);
  std::vector<Policy> out;
  while (true) {
    Policy p(shape);
    for (int h = 0; h < shape.horizon; ++h) {
      for (int s = 0; s < shape.states; ++s) p.step(h)(s, digits[h * shape.states + s]) = 1.0;
    }
    out.push_back(std::move(p));
    int i = slots - 1;
    while (i >= 0 && ++digits[i] == shape.actions) digits[i--] = 0;
    if (i < 0) break;
  }
  return out;
}

inline double best_value(const MeanFieldModel& m, const Policy& ref) {
  double best = -1e300;
  for (const auto& p : all_deterministic(m.shape())) best = std::max(best, path_return(m, p, ref));
  return best;
}

inline double ne_gap(const MeanFieldModel& m, const Policy& pi) {
  return best_value(m, pi) - path_return(m, pi, pi);
}

/// Expected sum of l1 discrepancies along paths of `adversary` in `drive` (frozen at its own
/// flow under ref), discrepancies between m at m's flow and n at n's flow.
inline double directed_discrepancy(const MeanFieldModel& drive, const MeanFieldModel& m,
                                   const MeanFieldModel& n, const Policy& adversary,
                                   const Policy& ref) {
  const auto fd = flow(drive, ref);
  const auto fm = flow(m, ref);
  const auto fn = flow(n, ref);
  double total = 0.0;
  enumerate_paths(
      drive.shape(), drive.initial(), adversary,
      [&](int h, int s, int a, int t) { return drive.transition(h, s, a, fd[h])(t); },
      [&](int h, int s, int a, double p) {
        total += p * (m.transition(h, s, a, fm[h]) - n.transition(h, s, a, fn[h])).cwiseAbs().sum();
      });
  return total;
}

/// max over deterministic adversaries of both directions.
inline double distance(const MeanFieldModel& m, const MeanFieldModel& n, const Policy& ref) {
  double best = 0.0;
  for (const auto& p : all_deterministic(m.shape())) {
    best = std::max(best, directed_discrepancy(m, m, n, p, ref));
    best = std::max(best, directed_discrepancy(n, m, n, p, ref));
  }
  return best;
}

}  // namespace oracle
