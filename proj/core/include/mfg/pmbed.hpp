#pragma once

#include "mfg/model.hpp"
#include "mfg/ne_solver.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mfg {

/// Which density each model's kernel is evaluated at.
enum class EluderVariant {
  PartialOwnFlow,   // nu(M) = flow of M under the conditioning policy
  PartialTrueFlow,  // nu(M) = flow of the true model under the conditioning policy
  Standard,         // (s, a, mu) items over a finite density grid
};

std::string to_string(EluderVariant v);

struct EluderItem {
  int s = 0;
  int a = 0;
  int grid_index = -1;  // standard variant only
  int witness_first = 0;
  int witness_second = 0;
};

struct EluderReport {
  EluderVariant variant = EluderVariant::PartialOwnFlow;
  int h = 0;
  std::string policy_id;
  double eps = 0.0;
  std::vector<EluderItem> items;
  int length() const { return static_cast<int>(items.size()); }
};

inline constexpr int kEluderMaxModels = 500;

/// Greedy pass over (s, a) in lexicographic order; a certified lower bound on the longest
/// partially eps-independent sequence at step h.
EluderReport greedy_partial_sequence(const ModelClass& models, int h, const Policy& ref, double eps,
                                     EluderVariant variant, const std::string& policy_id = "");

/// Greedy pass over (s, a, grid index) in lexicographic order.
EluderReport greedy_standard_sequence(const ModelClass& models, int h, double eps,
                                      const std::vector<Vector>& density_grid);

/// Re-checks every prefix with a fresh exhaustive pair search.
bool certify_partial(const EluderReport& report, const ModelClass& models, const Policy& ref);
bool certify_standard(const EluderReport& report, const ModelClass& models,
                      const std::vector<Vector>& density_grid);

struct PmbedEstimate {
  int estimate = 0;
  int best_h = 0;
  std::string best_policy;
  int policies_tried = 0;
};

/// Max over steps and over {uniform, seeded random policies, member NE policies}.
/// NE policies are solved with `ne_cfg` unless `ne_policies` is given.
PmbedEstimate pmbed_estimate(const ModelClass& models, double eps, int policy_samples,
                             std::uint64_t seed, const NESolveConfig& ne_cfg = {},
                             const std::optional<std::vector<Policy>>& ne_policies = std::nullopt);

nlohmann::json eluder_report_to_json(const EluderReport& report);

}  // namespace mfg
