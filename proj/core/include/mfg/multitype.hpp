#pragma once

#include "mfg/dynamics.hpp"
#include "mfg/model.hpp"
#include "mfg/ne_solver.hpp"
#include "mfg/rng.hpp"
#include "mfg/sampler.hpp"

#include <json.hpp>

#include <cstdint>
#include <memory>
#include <vector>

namespace mfg {

/// One density per type.
using JointDensity = std::vector<Vector>;
/// One policy per type.
using JointPolicy = std::vector<Policy>;

struct TypeShape {
  int states = 0;
  int actions = 0;
};

/// W typed MF-MDPs sharing a horizon and coupled through the joint density tuple.
class MultiTypeModel {
 public:
  MultiTypeModel(int horizon, std::vector<TypeShape> types, std::vector<Vector> initial,
                 LipschitzConstants lipschitz);
  virtual ~MultiTypeModel() = default;

  int horizon() const { return horizon_; }
  int types() const { return static_cast<int>(types_.size()); }
  const TypeShape& type_shape(int w) const { return types_.at(w); }
  Shape shape(int w) const { return Shape{horizon_, types_.at(w).states, types_.at(w).actions}; }
  const Vector& initial(int w) const { return initial_.at(w); }
  const LipschitzConstants& lipschitz() const { return lipschitz_; }

  virtual Vector transition(int w, int h, int s, int a, const JointDensity& mu) const = 0;
  virtual double reward(int w, int h, int s, int a, const JointDensity& mu) const = 0;
  virtual FrozenStep freeze(int w, int h, const JointDensity& mu) const;

 protected:
  int horizon_;
  std::vector<TypeShape> types_;
  std::vector<Vector> initial_;
  LipschitzConstants lipschitz_;
};

using MultiTypePtr = std::shared_ptr<const MultiTypeModel>;

/// Toy generator model: per-type softmax logits tilted by a linear map of the joint density.
class TabularMultiTypeModel final : public MultiTypeModel {
 public:
  struct TypeParams {
    std::vector<RowMatrix> logits;       // per step, S^w A^w x S^w
    std::vector<RowMatrix> mixing;       // per step, S^w x S_total
    std::vector<Vector> reward_base;     // per step, S^w A^w in [0.2, 0.8]
    std::vector<RowMatrix> reward_tilt;  // per step, S^w A^w x S_total in [-0.2, 0.2]
  };

  TabularMultiTypeModel(int horizon, std::vector<TypeShape> types, std::vector<Vector> initial,
                        double sensitivity, std::vector<TypeParams> params);

  Vector transition(int w, int h, int s, int a, const JointDensity& mu) const override;
  double reward(int w, int h, int s, int a, const JointDensity& mu) const override;
  FrozenStep freeze(int w, int h, const JointDensity& mu) const override;

  double sensitivity() const { return sensitivity_; }
  const TypeParams& params(int w) const { return params_.at(w); }

 private:
  Vector concat(const JointDensity& mu) const;

  double sensitivity_;
  int total_states_;
  std::vector<TypeParams> params_;
};

struct MultiTypeSpec {
  int horizon = 2;
  std::vector<TypeShape> types{{2, 2}, {2, 2}};
  double sensitivity = 0.5;
  double logit_scale = 2.0;
  bool zero_reward = false;
  std::uint64_t seed = 0;
};

std::shared_ptr<TabularMultiTypeModel> gen_multitype(const MultiTypeSpec& spec);

// ---- typed mean-field quantities ----

void validate_joint_policy(const MultiTypeModel& mt, const JointPolicy& joint);
/// mu[h][w]: type-w density at step h.
std::vector<JointDensity> mt_evolve(const MultiTypeModel& mt, const JointPolicy& joint);
/// Per-type MDPs with every density argument frozen at the joint flow of `joint`.
std::vector<FrozenDynamics> mt_freeze(const MultiTypeModel& mt, const JointPolicy& joint);
/// J^w(deviation; joint): type-w return of `deviation` with the flow frozen at `joint`.
double typed_return(const MultiTypeModel& mt, int w, const Policy& deviation, const JointPolicy& joint);
std::vector<double> typed_ne_gaps(const MultiTypeModel& mt, const JointPolicy& joint);

// ---- lifting ----

/// Single-type model on the union of typed state and action sets.
class LiftedModel final : public MeanFieldModel {
 public:
  explicit LiftedModel(MultiTypePtr mt);

  Vector transition(int h, int s, int a, const Vector& mu) const override;
  double reward(int h, int s, int a, const Vector& mu) const override;
  FrozenStep freeze(int h, const Vector& mu) const override;
  std::string kind() const override { return "lifted"; }

  const MultiTypeModel& base() const { return *mt_; }
  int types() const { return mt_->types(); }
  const std::vector<int>& state_offsets() const { return state_offset_; }
  const std::vector<int>& action_offsets() const { return action_offset_; }
  int state_type(int s) const { return state_type_.at(s); }
  int action_type(int a) const { return action_type_.at(a); }
  /// Per-state action ranges of the constrained policy set.
  const ActionRanges& constrained_ranges() const { return ranges_; }
  /// Type blocks of a lifted density, each renormalised (uniform when the block is empty).
  JointDensity split_density(const Vector& mu) const;

 private:
  MultiTypePtr mt_;
  std::vector<int> state_offset_;
  std::vector<int> action_offset_;
  std::vector<int> state_type_;
  std::vector<int> action_type_;
  ActionRanges ranges_;
};

LiftedModel lift(MultiTypePtr mt);
Policy lift_policy(const LiftedModel& lifted, const JointPolicy& joint);
/// Throws ConfigError when the policy puts more than 1e-12 mass outside its type block.
JointPolicy lower_policy(const LiftedModel& lifted, const Policy& policy);
bool is_constrained(const LiftedModel& lifted, const Policy& policy, double tol = 1e-12);

/// Best constrained deviation gain, computed by backward induction restricted to type blocks.
double constrained_ne_gap(const LiftedModel& lifted, const Policy& policy);
/// Damped best response restricted to the constrained policy set, uniform within blocks initially.
NESolveReport solve_constrained_ne(const LiftedModel& lifted, const NESolveConfig& cfg);

// ---- sampling and finite populations ----

/// Typed trajectory oracle: flow frozen at the joint policy, type-w agent follows the deviation.
class MultiTypeSampler {
 public:
  MultiTypeSampler(MultiTypePtr mt, std::uint64_t seed);
  Trajectory query_mt(const JointPolicy& joint, int w, const Policy& deviation);
  std::uint64_t trajectories() const { return trajectories_; }

 private:
  MultiTypePtr mt_;
  Rng base_;
  std::uint64_t trajectories_ = 0;
};

struct MtsagResult {
  double mean_gain = 0.0;
  double stderr_gain = 0.0;
  int episodes = 0;
  int total_agents = 0;
};

/// Finite-population game driven by empirical type distributions. Agent (w, 0) deviates in one
/// arm; both arms share random numbers, so a null deviation gives exactly zero gain.
MtsagResult mtsag_simulate(const MultiTypeModel& mt, const std::vector<int>& populations,
                           const JointPolicy& joint, int deviating_type, const Policy& deviation,
                           int episodes, std::uint64_t seed);

nlohmann::json multitype_to_json(const TabularMultiTypeModel& mt);
std::shared_ptr<TabularMultiTypeModel> multitype_from_json(const nlohmann::json& j);

}  // namespace mfg
