#include "mfg/ne_solver.hpp"
#include "mfg/class_io.hpp"
#include "mfg/parallel.hpp"

namespace mfg {

NESolveReport solve_ne(const FreezeFn& freeze, const Policy& init, const NESolveConfig& cfg,
                       const ActionRanges* ranges) {
  if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) throw ConfigError("solve_ne: alpha must lie in (0, 1]");
  if (!(cfg.tol > 0.0)) throw ConfigError("solve_ne: tol must be positive");
  if (cfg.max_iter < 1) throw ConfigError("solve_ne: max_iter must be at least 1");
  init.validate();

  NESolveReport report;
  Policy current = init;
  double best_gap = 0.0;
  for (int i = 0; i < cfg.max_iter; ++i) {
    const FrozenDynamics dyn = freeze(current);
    BestResponse br = optimize(dyn, nullptr, ranges);
    const double gap = br.value - evaluate(dyn, current);
    report.gap_history.push_back(gap);
    if (i == 0 || gap < best_gap) {
      best_gap = gap;
      report.best_iteration = i;
      report.policy = current;
    }
    if (gap <= cfg.tol) {
      report.converged = true;
      break;
    }
    current = current.mix(br.policy, cfg.alpha);
  }
  report.iterations = static_cast<int>(report.gap_history.size());
  report.gap = best_gap;
  return report;
}

NESolveReport solve_ne(const MeanFieldModel& model, const NESolveConfig& cfg,
                       const std::optional<Policy>& init) {
  const Policy start = init ? *init : Policy::uniform(model.shape());
  return solve_ne([&model](const Policy& ref) { return freeze_along(model, ref); }, start, cfg);
}

NESolveReport solve_ne(const PolicyAwareModel& pam, const NESolveConfig& cfg,
                       const std::optional<Policy>& init) {
  const Policy start = init ? *init : Policy::uniform(pam.shape());
  return solve_ne([&pam](const Policy& ref) { return pam.freeze(ref); }, start, cfg);
}

std::vector<NESolveReport> ne_policy_table(const ModelClass& models, const NESolveConfig& cfg) {
  std::vector<NESolveReport> table(models.size());
  parallel_for(table.size(), [&](std::size_t i) { table[i] = solve_ne(models[static_cast<int>(i)], cfg); });
  return table;
}

nlohmann::json ne_table_to_json(const std::vector<NESolveReport>& table) {
  nlohmann::json entries = nlohmann::json::array();
  for (std::size_t i = 0; i < table.size(); ++i) {
    nlohmann::json steps = nlohmann::json::array();
    for (int h = 0; h < table[i].policy.horizon(); ++h) steps.push_back(matrix_to_json(table[i].policy.step(h)));
    entries.push_back({{"model_index", i},
                       {"gap", table[i].gap},
                       {"iterations", table[i].iterations},
                       {"best_iteration", table[i].best_iteration},
                       {"converged", table[i].converged},
                       {"policy", steps}});
  }
  return {{"schema_version", kClassSchemaVersion}, {"entries", entries}};
}

std::vector<NESolveReport> ne_table_from_json(const nlohmann::json& j) {
  std::vector<NESolveReport> table;
  try {
    for (const auto& entry : j.at("entries")) {
      NESolveReport r;
      std::vector<RowMatrix> steps;
      for (const auto& m : entry.at("policy")) steps.push_back(matrix_from_json(m));
      r.policy = Policy(std::move(steps));
      r.iterations = entry.at("iterations").get<int>();
      r.best_iteration = entry.value("best_iteration", 0);
      r.gap = entry.at("gap").get<double>();
      r.converged = entry.at("converged").get<bool>();
      table.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed NE table: ") + e.what());
  }
  return table;
}

}  // namespace mfg
