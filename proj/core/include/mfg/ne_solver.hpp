#pragma once

#include "mfg/dynamics.hpp"
#include "mfg/model.hpp"
#include "mfg/pam.hpp"

#include <json.hpp>

#include <functional>
#include <optional>
#include <vector>

namespace mfg {

struct NESolveConfig {
  double alpha = 0.02;
  double tol = 5e-4;
  int max_iter = 5000;
};

struct NESolveReport {
  Policy policy;               // best-gap iterate
  int iterations = 0;          // evaluated iterates, equals gap_history.size()
  int best_iteration = 0;      // index into gap_history of the returned iterate
  double gap = 0.0;            // exact gap of the returned policy
  bool converged = false;
  std::vector<double> gap_history;
};

using FreezeFn = std::function<FrozenDynamics(const Policy&)>;

/// Damped best response: pi <- (1 - alpha) pi + alpha BR(pi) until the exact gap is <= tol.
NESolveReport solve_ne(const FreezeFn& freeze, const Policy& init, const NESolveConfig& cfg,
                       const ActionRanges* ranges = nullptr);
NESolveReport solve_ne(const MeanFieldModel& model, const NESolveConfig& cfg,
                       const std::optional<Policy>& init = std::nullopt);
NESolveReport solve_ne(const PolicyAwareModel& pam, const NESolveConfig& cfg,
                       const std::optional<Policy>& init = std::nullopt);

/// One report per member, each started from the uniform policy.
std::vector<NESolveReport> ne_policy_table(const ModelClass& models, const NESolveConfig& cfg);

nlohmann::json ne_table_to_json(const std::vector<NESolveReport>& table);
std::vector<NESolveReport> ne_table_from_json(const nlohmann::json& j);

}  // namespace mfg
