#pragma once

#include "mfg/kernel.hpp"
#include "mfg/model.hpp"
#include "mfg/policy.hpp"

#include <utility>
#include <vector>

namespace mfg {

/// Per-state allowed action range [first, second). Used for constrained best responses.
using ActionRanges = std::vector<std::pair<int, int>>;

struct BestResponse {
  Policy policy;  // deterministic
  double value = 0.0;
};

/// w(s * A + a) = mu(s) * pi(a | s).
Vector row_weights(const Vector& mu, const RowMatrix& pi);

// ---- Operations on a frozen (density-independent) MDP ----

/// State distributions of `policy` on fixed dynamics.
DensityFlow state_flow(const FrozenDynamics& dyn, const Policy& policy);

/// Expected total reward of `policy`. `rewards` overrides the stored per-step rewards.
double evaluate(const FrozenDynamics& dyn, const Policy& policy,
                const std::vector<Vector>* rewards = nullptr);

/// Backward induction. Ties go to the lowest action index; `ranges` restricts actions per state.
BestResponse optimize(const FrozenDynamics& dyn, const std::vector<Vector>* rewards = nullptr,
                      const ActionRanges* ranges = nullptr);

/// Largest expected sum of per-step row discrepancies over adversary policies.
double max_expected_discrepancy(const FrozenDynamics& dyn, const std::vector<Vector>& discrepancy);

/// Per-step l1 row distances between two frozen dynamics.
std::vector<Vector> step_discrepancies(const FrozenDynamics& a, const FrozenDynamics& b);

/// Symmetric conditional distance between two frozen dynamics of the same reference.
double frozen_distance(const FrozenDynamics& a, const FrozenDynamics& b);

// ---- Mean-field operations ----

DensityFlow evolve_density(const MeanFieldModel& model, const Policy& policy);

/// Freezes every step at the flow of `ref`; the flow is written to `flow` when given.
FrozenDynamics freeze_along(const MeanFieldModel& model, const Policy& ref,
                            DensityFlow* flow = nullptr);

double conditional_return(const MeanFieldModel& model, const Policy& eval, const Policy& ref);
BestResponse best_response(const MeanFieldModel& model, const Policy& ref);

/// Raw exploitability; may be slightly negative from rounding. Clamp only when reporting.
double ne_gap(const MeanFieldModel& model, const Policy& policy);
double ne_gap(const FrozenDynamics& dyn, const Policy& policy);

double conditional_model_distance(const MeanFieldModel& m, const MeanFieldModel& n,
                                  const Policy& ref);

/// Lazily freezes class members under one reference policy and answers distance queries.
class ConditionedClass {
 public:
  ConditionedClass(const ModelClass& models, Policy ref);

  const FrozenDynamics& frozen(int i) const;
  const DensityFlow& flow(int i) const;
  double distance(int i, int j) const;
  /// Equivalent to distance(i, j) <= eps, but rejects far pairs from a cheap lower bound first.
  bool within(int i, int j, double eps) const;

  /// Members of `pool` within eps of `center` (class indices, ascending order of `pool`).
  std::vector<int> neighborhood(int center, const std::vector<int>& pool, double eps) const;
  /// Argmax of neighbourhood size over `pool`, lowest index on ties.
  std::pair<int, int> central(const std::vector<int>& pool, double eps) const;

  const ModelClass& models() const { return *models_; }
  const Policy& ref() const { return ref_; }

 private:
  const ModelClass* models_;
  Policy ref_;
  mutable std::vector<FrozenDynamics> frozen_;
  mutable std::vector<DensityFlow> flows_;
  mutable std::vector<char> ready_;
};

std::vector<int> all_indices(int n);

std::vector<int> neighborhood(const ModelClass& models, int center, const Policy& ref, double eps0);
std::pair<int, int> central_model(const ModelClass& models, const Policy& ref, double eps0);

}  // namespace mfg
