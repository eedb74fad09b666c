#pragma once

#include "mfg/dynamics.hpp"
#include "mfg/model.hpp"
#include "mfg/ne_solver.hpp"
#include "mfg/pam.hpp"
#include "mfg/rng.hpp"

#include <json.hpp>

#include <cstdint>
#include <vector>

namespace mfg {

inline constexpr std::uint64_t kCoverMemberLimit = 1000000;

/// Grid points (N_1, ..., N_A) / N with sum N_i = N, in lexicographic order of counts.
std::vector<Vector> simplex_grid(int actions, int n);

/// Every policy whose rows all come from the simplex grid with N = ceil(2A / eps_bar).
///
/// Member k assigns grid row digit(k, h, s) to state s at step h, where the digits are the
/// mixed-radix expansion of k with position h * S + s most significant first.
class PolicyCover {
 public:
  PolicyCover(double eps_bar, const Shape& shape);

  double eps_bar() const { return eps_bar_; }
  int grid_n() const { return n_; }
  const Shape& shape() const { return shape_; }
  const std::vector<Vector>& rows() const { return rows_; }
  std::uint64_t size() const { return size_; }
  Policy member(std::uint64_t k) const;
  std::vector<int> digits(std::uint64_t k) const;

  /// Members within distance < radius of p, with their distances, in increasing index order.
  std::vector<std::pair<std::uint64_t, double>> members_near(const Policy& p, double radius) const;

 private:
  double eps_bar_;
  int n_;
  Shape shape_;
  std::vector<Vector> rows_;
  std::uint64_t size_;
};

PolicyCover policy_cover(double eps_bar, int states, int actions, int horizon);

/// Cover-weighted mixture of central models, each evaluated at its own cover policy.
class BridgePam final : public PolicyAwareModel {
 public:
  /// `pool` lists the class indices that play the role of the current model set.
  BridgePam(const ModelClass& models, const std::vector<int>& pool, double eps0, PolicyCover cover);

  const Shape& shape() const override { return shape_; }
  const Vector& initial() const override { return initial_; }
  FrozenDynamics freeze(const Policy& ref) const override;

  /// True when every cover policy's central model covers more than half of the pool.
  bool precondition_holds() const { return precondition_; }
  const PolicyCover& cover() const { return cover_; }
  int center(std::uint64_t k) const { return centers_[k]; }
  int center_size(std::uint64_t k) const { return center_sizes_[k]; }
  nlohmann::json diagnostics() const;

 private:
  Shape shape_;
  Vector initial_;
  double eps0_;
  PolicyCover cover_;
  std::vector<int> centers_;
  std::vector<int> center_sizes_;
  std::vector<std::vector<RowMatrix>> kernels_;  // per member, per step dense kernel
  std::vector<std::vector<Vector>> rewards_;
  bool precondition_ = true;
  int pool_size_ = 0;
};

/// Damped best response on the bridge model; reports the exact PAM gap of the best iterate.
NESolveReport bridge_policy(const BridgePam& bridge, const NESolveConfig& cfg);

/// Largest observed ratio max_h,row ||P(pi) - P(pi')||_1 / d(pi, pi') over random nearby pairs.
double bridge_continuity_probe(const BridgePam& bridge, int pairs, std::uint64_t seed);

}  // namespace mfg
