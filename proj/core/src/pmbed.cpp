#include "mfg/pmbed.hpp"
#include "mfg/dynamics.hpp"
#include "mfg/rng.hpp"

#include <algorithm>

namespace mfg {

namespace {

/// Kernel rows of every model at one step, one density per model.
struct StepRows {
  std::vector<FrozenStep> steps;

  /// Matrix whose row m is P_m(. | s, a).
  RowMatrix rows(int row) const {
    RowMatrix out(static_cast<Eigen::Index>(steps.size()), steps.front().kernel.next_states());
    for (std::size_t m = 0; m < steps.size(); ++m) {
      out.row(static_cast<Eigen::Index>(m)) = steps[m].kernel.row(row).transpose();
    }
    return out;
  }
};

void check_inputs(const ModelClass& models, int h, double eps) {
  if (models.size() > kEluderMaxModels) {
    throw ConfigError("eluder search is limited to " + std::to_string(kEluderMaxModels) + " models");
  }
  if (h < 0 || h >= models.shape().horizon) throw ConfigError("eluder search: step out of range");
  if (!(eps > 0.0)) throw ConfigError("eluder search: eps must be positive");
}

StepRows partial_rows(const ModelClass& models, int h, const Policy& ref, EluderVariant variant) {
  StepRows out;
  if (variant == EluderVariant::PartialTrueFlow) {
    const Vector nu = evolve_density(models.true_model(), ref)[h];
    for (int m = 0; m < models.size(); ++m) out.steps.push_back(models[m].freeze(h, nu));
  } else if (variant == EluderVariant::PartialOwnFlow) {
    for (int m = 0; m < models.size(); ++m) {
      out.steps.push_back(models[m].freeze(h, evolve_density(models[m], ref)[h]));
    }
  } else {
    throw ConfigError("partial eluder search needs a partial variant");
  }
  return out;
}

/// Incremental greedy state: squared discrepancy prefix sums for every unordered pair.
class GreedyPairs {
 public:
  explicit GreedyPairs(int n) : n_(n), sq_(static_cast<std::size_t>(n) * (n - 1) / 2, 0.0) {}

  /// Offers one item whose pairwise discrepancies come from `rows`; appends it when
  /// some pair has prefix sum <= eps^2 and new discrepancy > eps.
  bool offer(const RowMatrix& rows, double eps, int& first, int& second) {
    const double eps2 = eps * eps;
    std::vector<double> disc(sq_.size());
    bool take = false;
    std::size_t p = 0;
    for (int i = 0; i < n_; ++i) {
      for (int j = i + 1; j < n_; ++j, ++p) {
        disc[p] = (rows.row(i) - rows.row(j)).lpNorm<1>();
        if (!take && sq_[p] <= eps2 && disc[p] > eps) {
          take = true;
          first = i;
          second = j;
        }
      }
    }
    if (take) {
      for (std::size_t q = 0; q < sq_.size(); ++q) sq_[q] += disc[q] * disc[q];
    }
    return take;
  }

 private:
  int n_;
  std::vector<double> sq_;
};

/// Fresh exhaustive check that `item_rows.back()` is independent of the earlier rows.
bool independent_of_prefix(const std::vector<RowMatrix>& item_rows, double eps) {
  const RowMatrix& last = item_rows.back();
  const int n = static_cast<int>(last.rows());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      double prefix = 0.0;
      for (std::size_t k = 0; k + 1 < item_rows.size(); ++k) {
        const double d = (item_rows[k].row(i) - item_rows[k].row(j)).lpNorm<1>();
        prefix += d * d;
      }
      if (prefix <= eps * eps && (last.row(i) - last.row(j)).lpNorm<1>() > eps) return true;
    }
  }
  return false;
}

}  // namespace

std::string to_string(EluderVariant v) {
  switch (v) {
    case EluderVariant::PartialOwnFlow: return "partial-I";
    case EluderVariant::PartialTrueFlow: return "partial-II";
    case EluderVariant::Standard: return "standard";
  }
  return "unknown";
}

EluderReport greedy_partial_sequence(const ModelClass& models, int h, const Policy& ref, double eps,
                                     EluderVariant variant, const std::string& policy_id) {
  check_inputs(models, h, eps);
  const StepRows rows = partial_rows(models, h, ref, variant);
  EluderReport report{variant, h, policy_id, eps, {}};
  const Shape& shape = models.shape();
  GreedyPairs greedy(models.size());
  for (int s = 0; s < shape.states; ++s) {
    for (int a = 0; a < shape.actions; ++a) {
      int first = 0;
      int second = 0;
      if (greedy.offer(rows.rows(s * shape.actions + a), eps, first, second)) {
        report.items.push_back(EluderItem{s, a, -1, first, second});
      }
    }
  }
  return report;
}

EluderReport greedy_standard_sequence(const ModelClass& models, int h, double eps,
                                      const std::vector<Vector>& density_grid) {
  check_inputs(models, h, eps);
  if (density_grid.empty()) throw ConfigError("standard eluder search needs a density grid");
  std::vector<StepRows> per_grid(density_grid.size());
  for (std::size_t g = 0; g < density_grid.size(); ++g) {
    for (int m = 0; m < models.size(); ++m) per_grid[g].steps.push_back(models[m].freeze(h, density_grid[g]));
  }
  EluderReport report{EluderVariant::Standard, h, "grid", eps, {}};
  const Shape& shape = models.shape();
  GreedyPairs greedy(models.size());
  for (int s = 0; s < shape.states; ++s) {
    for (int a = 0; a < shape.actions; ++a) {
      for (std::size_t g = 0; g < density_grid.size(); ++g) {
        int first = 0;
        int second = 0;
        if (greedy.offer(per_grid[g].rows(s * shape.actions + a), eps, first, second)) {
          report.items.push_back(EluderItem{s, a, static_cast<int>(g), first, second});
        }
      }
    }
  }
  return report;
}

bool certify_partial(const EluderReport& report, const ModelClass& models, const Policy& ref) {
  const StepRows rows = partial_rows(models, report.h, ref, report.variant);
  std::vector<RowMatrix> item_rows;
  for (const auto& item : report.items) {
    item_rows.push_back(rows.rows(item.s * models.shape().actions + item.a));
    if (!independent_of_prefix(item_rows, report.eps)) return false;
  }
  return true;
}

bool certify_standard(const EluderReport& report, const ModelClass& models,
                      const std::vector<Vector>& density_grid) {
  std::vector<RowMatrix> item_rows;
  for (const auto& item : report.items) {
    if (item.grid_index < 0 || item.grid_index >= static_cast<int>(density_grid.size())) return false;
    StepRows rows;
    for (int m = 0; m < models.size(); ++m) {
      rows.steps.push_back(models[m].freeze(report.h, density_grid[item.grid_index]));
    }
    item_rows.push_back(rows.rows(item.s * models.shape().actions + item.a));
    if (!independent_of_prefix(item_rows, report.eps)) return false;
  }
  return true;
}

PmbedEstimate pmbed_estimate(const ModelClass& models, double eps, int policy_samples,
                             std::uint64_t seed, const NESolveConfig& ne_cfg,
                             const std::optional<std::vector<Policy>>& ne_policies) {
  if (policy_samples < 0) throw ConfigError("pmbed_estimate: policy_samples must be nonnegative");
  const Shape& shape = models.shape();
  std::vector<std::pair<std::string, Policy>> policies;
  policies.emplace_back("uniform", Policy::uniform(shape));
  Rng rng(seed);
  for (int i = 0; i < policy_samples; ++i) {
    policies.emplace_back("random-" + std::to_string(i), random_policy(shape, rng));
  }
  if (ne_policies) {
    for (std::size_t m = 0; m < ne_policies->size(); ++m) {
      policies.emplace_back("ne-" + std::to_string(m), (*ne_policies)[m]);
    }
  } else {
    const auto table = ne_policy_table(models, ne_cfg);
    for (std::size_t m = 0; m < table.size(); ++m) {
      policies.emplace_back("ne-" + std::to_string(m), table[m].policy);
    }
  }
  PmbedEstimate out;
  out.best_policy = policies.front().first;
  for (const auto& [id, policy] : policies) {
    for (int h = 0; h < shape.horizon; ++h) {
      const int len =
          greedy_partial_sequence(models, h, policy, eps, EluderVariant::PartialOwnFlow, id).length();
      if (len > out.estimate) {
        out.estimate = len;
        out.best_h = h;
        out.best_policy = id;
      }
    }
  }
  out.policies_tried = static_cast<int>(policies.size());
  return out;
}

nlohmann::json eluder_report_to_json(const EluderReport& report) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& item : report.items) {
    nlohmann::json j = {{"s", item.s}, {"a", item.a}, {"witness", {item.witness_first, item.witness_second}}};
    if (item.grid_index >= 0) j["grid_index"] = item.grid_index;
    items.push_back(std::move(j));
  }
  return {{"variant", to_string(report.variant)},
          {"h", report.h},
          {"policy", report.policy_id},
          {"eps", report.eps},
          {"length", report.length()},
          {"sequence", std::move(items)}};
}

}  // namespace mfg
