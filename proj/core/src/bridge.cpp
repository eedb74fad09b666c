#include "mfg/bridge.hpp"
#include "mfg/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace mfg {

std::vector<Vector> simplex_grid(int actions, int n) {
  if (actions <= 0 || n <= 0) throw ConfigError("simplex grid needs positive size");
  std::vector<Vector> out;
  std::vector<int> counts(actions, 0);
  auto recurse = [&](auto&& self, int pos, int remaining) -> void {
    if (pos == actions - 1) {
      counts[pos] = remaining;
      Vector v(actions);
      for (int i = 0; i < actions; ++i) v(i) = static_cast<double>(counts[i]) / n;
      out.push_back(std::move(v));
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      counts[pos] = c;
      self(self, pos + 1, remaining - c);
    }
  };
  recurse(recurse, 0, n);
  return out;
}

PolicyCover::PolicyCover(double eps_bar, const Shape& shape) : eps_bar_(eps_bar), shape_(shape) {
  if (!(eps_bar > 0.0)) throw ConfigError("policy cover: eps_bar must be positive");
  if (shape.horizon <= 0 || shape.states <= 0 || shape.actions <= 0) {
    throw ConfigError("policy cover: dimensions must be positive");
  }
  n_ = static_cast<int>(std::ceil(2.0 * shape.actions / eps_bar - 1e-12));
  rows_ = simplex_grid(shape.actions, n_);
  const int positions = shape.horizon * shape.states;
  double count = std::pow(static_cast<double>(rows_.size()), positions);
  if (count > static_cast<double>(kCoverMemberLimit)) {
    throw ConfigError("policy cover would have " + std::to_string(count) +
                      " members, above the limit of " + std::to_string(kCoverMemberLimit));
  }
  size_ = 1;
  for (int i = 0; i < positions; ++i) size_ *= rows_.size();
}

std::vector<int> PolicyCover::digits(std::uint64_t k) const {
  const int positions = shape_.horizon * shape_.states;
  std::vector<int> d(positions);
  for (int pos = positions - 1; pos >= 0; --pos) {
    d[pos] = static_cast<int>(k % rows_.size());
    k /= rows_.size();
  }
  return d;
}

Policy PolicyCover::member(std::uint64_t k) const {
  if (k >= size_) throw ConfigError("policy cover: member index out of range");
  const auto d = digits(k);
  Policy p(shape_);
  for (int h = 0; h < shape_.horizon; ++h) {
    for (int s = 0; s < shape_.states; ++s) p.step(h).row(s) = rows_[d[h * shape_.states + s]].transpose();
  }
  return p;
}

std::vector<std::pair<std::uint64_t, double>> PolicyCover::members_near(const Policy& p,
                                                                        double radius) const {
  const int positions = shape_.horizon * shape_.states;
  const int R = static_cast<int>(rows_.size());
  // For each position, grid rows closer than the radius and their distances.
  std::vector<std::vector<std::pair<int, double>>> allowed(positions);
  for (int h = 0; h < shape_.horizon; ++h) {
    for (int s = 0; s < shape_.states; ++s) {
      const Vector row = p.step(h).row(s).transpose();
      for (int r = 0; r < R; ++r) {
        const double d = (row - rows_[r]).lpNorm<1>();
        if (d < radius) allowed[h * shape_.states + s].emplace_back(r, d);
      }
    }
  }
  std::vector<std::pair<std::uint64_t, double>> out;
  for (const auto& a : allowed) {
    if (a.empty()) return out;
  }
  std::vector<int> cursor(positions, 0);
  while (true) {
    std::uint64_t index = 0;
    double dist = 0.0;
    for (int pos = 0; pos < positions; ++pos) {
      const auto& [r, d] = allowed[pos][cursor[pos]];
      index = index * R + static_cast<std::uint64_t>(r);
      dist = std::max(dist, d);
    }
    out.emplace_back(index, dist);
    int pos = positions - 1;
    while (pos >= 0 && ++cursor[pos] == static_cast<int>(allowed[pos].size())) {
      cursor[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  return out;
}

PolicyCover policy_cover(double eps_bar, int states, int actions, int horizon) {
  return PolicyCover(eps_bar, Shape{horizon, states, actions});
}

BridgePam::BridgePam(const ModelClass& models, const std::vector<int>& pool, double eps0,
                     PolicyCover cover)
    : shape_(models.shape()), initial_(models.initial()), eps0_(eps0), cover_(std::move(cover)) {
  if (pool.empty()) throw ConfigError("bridge model needs a nonempty pool");
  if (cover_.shape() != shape_) throw ConfigError("bridge model: cover shape mismatch");
  pool_size_ = static_cast<int>(pool.size());
  const std::size_t K = cover_.size();
  centers_.resize(K);
  center_sizes_.resize(K);
  kernels_.resize(K);
  rewards_.resize(K);
  parallel_for(K, [&](std::size_t k) {
    ConditionedClass cc(models, cover_.member(k));
    const auto [center, size] = cc.central(pool, eps0_);
    centers_[k] = center;
    center_sizes_[k] = size;
    const FrozenDynamics& dyn = cc.frozen(center);
    for (const auto& step : dyn.steps) {
      kernels_[k].push_back(step.kernel.to_dense());
      rewards_[k].push_back(step.reward);
    }
  });
  for (std::size_t k = 0; k < K; ++k) {
    if (2 * center_sizes_[k] <= pool_size_) precondition_ = false;
  }
}

FrozenDynamics BridgePam::freeze(const Policy& ref) const {
  if (ref.shape() != shape_) throw ConfigError("bridge model: policy shape mismatch");
  const double radius = 2.0 * cover_.eps_bar();
  const auto near = cover_.members_near(ref, radius);
  std::vector<RowMatrix> p(shape_.horizon, RowMatrix::Zero(shape_.rows(), shape_.states));
  std::vector<Vector> r(shape_.horizon, Vector::Zero(shape_.rows()));
  double total = 0.0;
  for (const auto& [k, d] : near) {
    const double w = radius - d;
    if (w <= 0.0) continue;
    total += w;
    for (int h = 0; h < shape_.horizon; ++h) {
      p[h] += w * kernels_[k][h];
      r[h] += w * rewards_[k][h];
    }
  }
  if (!(total > 0.0)) throw InvariantError("bridge model: no cover member within 2 eps_bar");
  FrozenDynamics dyn{shape_, initial_, {}};
  for (int h = 0; h < shape_.horizon; ++h) {
    dyn.steps.push_back(FrozenStep{StepKernel::dense(p[h] / total), r[h] / total});
  }
  return dyn;
}

nlohmann::json BridgePam::diagnostics() const {
  nlohmann::json members = nlohmann::json::array();
  for (std::size_t k = 0; k < centers_.size(); ++k) {
    members.push_back({{"cover_index", k}, {"center", centers_[k]}, {"neighborhood", center_sizes_[k]}});
  }
  return {{"eps0", eps0_},
          {"eps_bar", cover_.eps_bar()},
          {"cover_size", cover_.size()},
          {"pool_size", pool_size_},
          {"precondition_holds", precondition_},
          {"members", std::move(members)}};
}

NESolveReport bridge_policy(const BridgePam& bridge, const NESolveConfig& cfg) {
  return solve_ne(bridge, cfg);
}

double bridge_continuity_probe(const BridgePam& bridge, int pairs, std::uint64_t seed) {
  Rng rng(seed);
  const Shape& shape = bridge.shape();
  double worst = 0.0;
  for (int i = 0; i < pairs; ++i) {
    const Policy p = random_policy(shape, rng);
    const Policy noise = random_policy(shape, rng);
    const Policy q = p.mix(noise, rng.uniform(0.01, 0.5));
    const double d = policy_distance(p, q);
    if (!(d > 0.0)) continue;
    const FrozenDynamics a = bridge.freeze(p);
    const FrozenDynamics b = bridge.freeze(q);
    double diff = 0.0;
    for (int h = 0; h < shape.horizon; ++h) {
      diff = std::max(diff, row_l1_distances(a.steps[h].kernel, b.steps[h].kernel).maxCoeff());
    }
    worst = std::max(worst, diff / d);
  }
  return worst;
}

}  // namespace mfg
