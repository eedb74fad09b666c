#pragma once

#include "mfg/model.hpp"
#include "mfg/rng.hpp"

#include <atomic>
#include <cstdint>
#include <memory>
#include <vector>

namespace mfg {

// ---------------------------------------------------------------------------
// Random tabular class: softmax(base logits + kappa * W_h mu), shared reward.

struct TabularReward {
  Shape shape;
  double sensitivity = 0.0;
  std::vector<Vector> base;       // per step, SA entries in [0.2, 0.8]
  std::vector<RowMatrix> tilt;    // per step, SA x S entries in [-0.2, 0.2]
};

class TabularModel final : public MeanFieldModel {
 public:
  /// logits[h] is SA x S, mixing[h] is S x S with entries in [-1, 1].
  TabularModel(Shape shape, Vector initial, double sensitivity, std::vector<RowMatrix> logits,
               std::vector<RowMatrix> mixing, std::shared_ptr<const TabularReward> reward);

  Vector transition(int h, int s, int a, const Vector& mu) const override;
  double reward(int h, int s, int a, const Vector& mu) const override;
  FrozenStep freeze(int h, const Vector& mu) const override;
  std::string kind() const override { return "tabular"; }

  double sensitivity() const { return sensitivity_; }
  const std::vector<RowMatrix>& logits() const { return logits_; }
  const std::vector<RowMatrix>& mixing() const { return mixing_; }
  const TabularReward& reward_table() const { return *reward_; }
  const std::shared_ptr<const TabularReward>& shared_reward() const { return reward_; }

 private:
  double sensitivity_;
  std::vector<RowMatrix> logits_;
  std::vector<RowMatrix> mixing_;
  std::shared_ptr<const TabularReward> reward_;
};

struct TabularSpec {
  int horizon = 2;
  int states = 2;
  int actions = 2;
  int models = 3;
  double density_sensitivity = 0.5;
  std::uint64_t seed = 0;
  /// Logit magnitude; larger values give more peaked kernels.
  double logit_scale = 2.0;
};

ModelClass gen_tabular_class(const TabularSpec& spec);
ModelClass gen_tabular_class(int horizon, int states, int actions, int models,
                             double density_sensitivity, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Linear-feature class: P(s'|s,a,mu) proportional to |phi(s,a)^T G_h(mu) psi(s')|.

struct LinearFeatures {
  Shape shape;
  int dim_phi = 0;
  int dim_psi = 0;
  std::vector<RowMatrix> phi;       // per step, SA x d_phi
  std::vector<RowMatrix> u;         // per step, S x (d_phi * d_psi)
  std::vector<Vector> reward_base;  // per step, SA
  std::vector<RowMatrix> reward_mix;  // per step, d_phi x S; r = base + phi^T R mu, clamped
};

class LinearModel final : public MeanFieldModel {
 public:
  LinearModel(std::shared_ptr<const LinearFeatures> features, std::vector<RowMatrix> psi,
              LipschitzConstants lipschitz);

  Vector transition(int h, int s, int a, const Vector& mu) const override;
  double reward(int h, int s, int a, const Vector& mu) const override;
  FrozenStep freeze(int h, const Vector& mu) const override;
  std::string kind() const override { return "linear"; }

  /// G_h(mu) = reshape(mu^T U_h, d_phi, d_psi), row-major.
  RowMatrix g_matrix(int h, const Vector& mu) const;
  const LinearFeatures& features() const { return *features_; }
  const std::shared_ptr<const LinearFeatures>& shared_features() const { return features_; }
  const std::vector<RowMatrix>& psi() const { return psi_; }

  /// Number of all-zero normalisation rows replaced by the uniform distribution so far.
  std::uint64_t degenerate_rows() const { return degenerate_rows_.load(); }

 private:
  Vector reward_vector(int h, const Vector& mu) const;

  std::shared_ptr<const LinearFeatures> features_;
  std::vector<RowMatrix> psi_;  // per step, d_psi x S
  mutable std::atomic<std::uint64_t> degenerate_rows_{0};
};

struct LinearSpec {
  int horizon = 3;
  int states = 100;
  int actions = 50;
  int dim_phi = 5;
  int dim_psi = 5;
  int models = 200;
  double beta_max = 0.1;
  std::uint64_t seed = 0;
};

ModelClass gen_linear_class(const LinearSpec& spec);

// ---------------------------------------------------------------------------
// Three-layer hard family: only the second layer depends on the model.

class HardInstanceModel final : public MeanFieldModel {
 public:
  /// center empty means the flat model (constant 1/2 - 1/2 second layer).
  HardInstanceModel(int d, double eps, double lipschitz_t, Vector center);

  Vector transition(int h, int s, int a, const Vector& mu) const override;
  double reward(int h, int s, int a, const Vector& mu) const override;
  FrozenStep freeze(int h, const Vector& mu) const override;
  std::string kind() const override { return "hard"; }

  bool is_flat() const { return center_.size() == 0; }
  const Vector& center() const { return center_; }
  double eps() const { return eps_; }
  /// Probability of the rewarded third-layer state from any second-layer pair.
  double bump_probability(const Vector& mu2) const;

 private:
  int d_;
  double eps_;
  double lt_;
  Vector center_;
};

struct HardInstanceSpec {
  int d = 3;
  double eps = 0.04;
  double lipschitz_t = 1.0;
  int zeta = 0;  // 0 means floor(L_T / (5 eps))
  int models = 20;
};

/// All densities over d states with entries in multiples of 1/zeta, lexicographically ascending counts.
std::vector<Vector> density_grid(int d, int zeta);
int resolved_zeta(const HardInstanceSpec& spec);

/// Members 0..N-1 are centred on the first N grid points, member N is the flat model; true index 0.
ModelClass gen_hard_instance(const HardInstanceSpec& spec);

// ---------------------------------------------------------------------------

struct LipschitzProbe {
  double transition_ratio = 0.0;
  double reward_ratio = 0.0;
};

LipschitzProbe lipschitz_probe(const MeanFieldModel& model, int pairs, std::uint64_t seed);

}  // namespace mfg
