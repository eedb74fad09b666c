#include "mfg/elimination.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mfg {

namespace {

constexpr double kLogZero = -1e30;

std::string join(const std::vector<int>& v) {
  std::ostringstream out;
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << v[i];
  return out.str();
}

bool contains(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

int round_cap(int class_size) {
  return static_cast<int>(std::ceil(std::log2(std::max(1, class_size)))) + 8;
}

/// Exact adversary values for every ordered pair of a pool, used by the Full mode.
struct FullAdversary {
  std::vector<int> pool;
  std::vector<double> values;  // [i][j] local indices
  std::vector<Policy> policies;

  FullAdversary(const ConditionedClass& cc, const std::vector<int>& members) : pool(members) {
    const std::size_t n = pool.size();
    values.assign(n * n, 0.0);
    policies.resize(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const auto d = step_discrepancies(cc.frozen(pool[i]), cc.frozen(pool[j]));
        BestResponse br = optimize(cc.frozen(pool[i]), &d);
        values[i * n + j] = br.value;
        policies[i * n + j] = std::move(br.policy);
      }
    }
  }

  DiscrepancyTable::Argmax max_over(const std::vector<int>& survivors, Policy& adversary) const {
    DiscrepancyTable::Argmax best;
    best.first = best.second = survivors.front();
    bool found = false;
    const std::size_t n = pool.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (!contains(survivors, pool[i])) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j || !contains(survivors, pool[j])) continue;
        if (!found || values[i * n + j] > best.value) {
          best = {values[i * n + j], 0, pool[i], pool[j]};
          adversary = policies[i * n + j];
          found = true;
        }
      }
    }
    return best;
  }
};

}  // namespace

std::string to_string(CandidateMode mode) {
  switch (mode) {
    case CandidateMode::NeSet: return "ne-set";
    case CandidateMode::EpsCover: return "eps-cover";
    case CandidateMode::Explicit: return "explicit";
    case CandidateMode::Full: return "full";
  }
  return "unknown";
}

CandidateMode candidate_mode_from_string(const std::string& name) {
  if (name == "ne-set") return CandidateMode::NeSet;
  if (name == "eps-cover") return CandidateMode::EpsCover;
  if (name == "explicit") return CandidateMode::Explicit;
  if (name == "full") return CandidateMode::Full;
  throw ConfigError("unknown candidate mode '" + name + "'");
}

void ElimConfig::validate() const {
  if (!(eps0 > 0.0)) throw ConfigError("elimination: eps0 must be positive");
  if (!(eps_tilde > 0.0 && eps_tilde < eps0)) throw ConfigError("elimination: need 0 < eps_tilde < eps0");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("elimination: delta must lie in (0, 1)");
  if (T < 1) throw ConfigError("elimination: T must be at least 1");
}

ElimConfig ElimConfig::defaults(double epsilon, double reward_lipschitz, int horizon, double delta,
                                int T) {
  ElimConfig cfg;
  cfg.eps0 = epsilon / (8.0 * (1.0 + reward_lipschitz * horizon) * (horizon + 4));
  cfg.eps_tilde = cfg.eps0 / 6.0;
  cfg.delta = delta;
  cfg.T = T;
  return cfg;
}

void ElimTrace::write_csv_header(std::ostream& out) {
  out << "round,branch,inner_iter,delta_max,models_remaining,trajectories_total,norm_max_ne_gap\n";
}

void ElimTrace::write_csv(std::ostream& out) const {
  write_csv_header(out);
  out.precision(17);
  for (const auto& r : records) {
    out << r.round << ',' << r.branch << ',' << r.inner_iter << ',';
    if (std::isnan(r.delta_max)) {
      out << "nan";
    } else {
      out << r.delta_max;
    }
    out << ',' << r.models_remaining << ',' << r.trajectories_total << ',' << r.norm_max_ne_gap
        << '\n';
  }
}

double normalized_gap(double gap_t, double gap_0, double clamp_below) {
  if (!(gap_0 > 0.0)) return 0.0;
  const double norm = std::max(0.0, gap_t) / gap_0;
  return norm < clamp_below ? 0.0 : norm;
}

ElimOutcome model_elim(const Policy& ref, const ModelClass& models, const std::vector<int>& pool,
                       const ElimConfig& cfg, SamplerState& sampler,
                       const std::vector<Policy>& candidates, int class_size, ElimTrace* trace,
                       const ElimRecord& stamp, const SurvivorReporter& reporter) {
  cfg.validate();
  if (pool.empty()) throw ConfigError("model_elim: empty model pool");
  if (class_size < static_cast<int>(pool.size())) throw ConfigError("model_elim: class size below pool size");
  const Shape& shape = models.shape();
  const int H = shape.horizon;

  ConditionedClass cc(models, ref);
  std::vector<int> survivors = pool;
  std::sort(survivors.begin(), survivors.end());

  std::optional<DiscrepancyTable> table;
  std::optional<FullAdversary> full;
  std::vector<Policy> cands;
  if (cfg.mode == CandidateMode::Full) {
    full.emplace(cc, survivors);
  } else {
    if (candidates.empty()) throw ConfigError("model_elim: candidate list is empty");
    cands = candidates;
    if (std::find(cands.begin(), cands.end(), ref) == cands.end()) cands.push_back(ref);
    table.emplace(cc, survivors, cands);
  }

  const double threshold =
      std::log(static_cast<double>(H) * cfg.T * static_cast<double>(class_size) / cfg.delta);
  std::vector<double> score(models.size(), 0.0);

  ElimOutcome out;
  const std::uint64_t start_trajectories = sampler.trajectories();
  auto record = [&](int t, double delta_max) {
    if (!trace) return;
    ElimRecord r = stamp;
    r.inner_iter = t;
    r.delta_max = delta_max;
    r.models_remaining = static_cast<int>(survivors.size());
    r.trajectories_total = sampler.trajectories();
    r.norm_max_ne_gap = reporter ? reporter(survivors) : 0.0;
    r.survivors = survivors;
    trace->records.push_back(std::move(r));
  };

  for (int t = 1; t <= cfg.T; ++t) {
    Policy adversary;
    DiscrepancyTable::Argmax best;
    if (survivors.size() < 2) {
      best = DiscrepancyTable::Argmax{0.0, 0, survivors.front(), survivors.front()};
    } else if (full) {
      best = full->max_over(survivors, adversary);
    } else {
      best = table->max_over(survivors);
      adversary = cands[best.candidate];
    }
    out.last_delta_max = best.value;
    out.last_argmax = best;
    if (best.value <= cfg.eps_tilde) {
      out.stopped_by_threshold = true;
      record(t, best.value);
      break;
    }
    for (int h = 0; h < H; ++h) {
      for (const Policy* eval : {&ref, static_cast<const Policy*>(&adversary)}) {
        const Trajectory traj = sampler.query(*eval, ref);
        const Transition& z = traj[h];
        const int row = z.s * shape.actions + z.a;
        for (int m : survivors) {
          const double p = cc.frozen(m).steps[h].kernel.prob(row, z.s_next);
          score[m] += p > 0.0 ? std::log(p) : kLogZero;
        }
      }
    }
    ++out.iterations;
    double top = -std::numeric_limits<double>::infinity();
    for (int m : survivors) top = std::max(top, score[m]);
    std::vector<int> kept;
    for (int m : survivors) {
      if (score[m] >= top - threshold) kept.push_back(m);
    }
    if (kept.empty()) {
      std::ostringstream msg;
      msg << "model_elim eliminated every model (pool: " << join(survivors) << ", top score " << top
          << ", threshold " << threshold << ")";
      throw InvariantError(msg.str());
    }
    survivors = std::move(kept);
    record(t, best.value);
  }
  out.survivors = survivors;
  out.trajectories_used = sampler.trajectories() - start_trajectories;
  return out;
}

MebpResult mebp_heuristic(const ModelClass& models, const ElimConfig& cfg, SamplerState& sampler,
                          const std::vector<NESolveReport>& ne_table,
                          const ReportingOptions& reporting) {
  cfg.validate();
  const int n_all = models.size();
  if (static_cast<int>(ne_table.size()) != n_all) {
    throw ConfigError("mebp: the NE table must cover every class member");
  }
  ElimConfig ecfg = cfg;
  ecfg.delta = cfg.delta / (std::log2(static_cast<double>(n_all)) + 1.0);

  // Reporting only: worst true-model gap among the survivors' NE policies.
  std::vector<double> true_gaps(n_all);
  for (int m = 0; m < n_all; ++m) true_gaps[m] = ne_gap(sampler.model(), ne_table[m].policy);
  const double gap0 = std::max(0.0, *std::max_element(true_gaps.begin(), true_gaps.end()));
  const SurvivorReporter reporter = [&](const std::vector<int>& surv) {
    double worst = 0.0;
    for (int m : surv) worst = std::max(worst, true_gaps[m]);
    return normalized_gap(worst, gap0, reporting.clamp_below);
  };

  MebpResult result;
  std::vector<int> survivors = all_indices(n_all);
  ElimRecord init;
  init.round = 0;
  init.branch = "init";
  init.delta_max = std::numeric_limits<double>::quiet_NaN();
  init.models_remaining = n_all;
  init.trajectories_total = sampler.trajectories();
  init.norm_max_ne_gap = reporter(survivors);
  init.survivors = survivors;
  result.trace.records.push_back(init);
  const std::uint64_t start = sampler.trajectories();

  auto finish = [&](int model) {
    result.policy = ne_table[model].policy;
    result.returned_model = model;
    result.success = true;
    result.survivors = survivors;
    result.trajectories = sampler.trajectories() - start;
    return result;
  };

  const int cap = round_cap(n_all);
  for (int k = 1; k <= cap; ++k) {
    result.rounds = k;
    const int n = static_cast<int>(survivors.size());
    if (n == 1) return finish(survivors.front());
    std::vector<Policy> cands;
    for (int m : survivors) cands.push_back(ne_table[m].policy);

    int chosen = -1;
    for (int mk : survivors) {
      ConditionedClass cc(models, ne_table[mk].policy);
      bool small = true;
      for (int mt : survivors) {
        if (2 * static_cast<int>(cc.neighborhood(mt, survivors, cfg.eps0).size()) > n) {
          small = false;
          break;
        }
      }
      if (small) {
        chosen = mk;
        break;
      }
    }
    if (chosen >= 0) {
      ElimRecord stamp;
      stamp.round = k;
      stamp.branch = "if";
      stamp.ref_model = chosen;
      survivors = model_elim(ne_table[chosen].policy, models, survivors, ecfg, sampler, cands, n_all,
                             &result.trace, stamp, reporter)
                      .survivors;
      continue;
    }

    int best = survivors.front();
    int best_size = -1;
    for (int m : survivors) {
      ConditionedClass cc(models, ne_table[m].policy);
      const int size = static_cast<int>(cc.neighborhood(m, survivors, cfg.eps0).size());
      if (size > best_size) {
        best = m;
        best_size = size;
      }
    }
    ElimRecord stamp;
    stamp.round = k;
    stamp.branch = "else";
    stamp.ref_model = best;
    survivors = model_elim(ne_table[best].policy, models, survivors, ecfg, sampler, cands, n_all,
                           &result.trace, stamp, reporter)
                    .survivors;
    if (contains(survivors, best)) return finish(best);
  }
  // The last permitted round may leave a single survivor; that is the normal stopping state.
  if (survivors.size() == 1) return finish(survivors.front());
  result.success = false;
  result.failure = "round limit of " + std::to_string(cap) + " exceeded";
  result.survivors = survivors;
  result.trajectories = sampler.trajectories() - start;
  return result;
}

MebpResult mebp_exact(const ModelClass& models, const ElimConfig& cfg, double bar_eps,
                      double epsilon, SamplerState& sampler, const NESolveConfig& ne_cfg,
                      std::uint64_t seed) {
  cfg.validate();
  const Shape& shape = models.shape();
  if (shape.states > 3 || shape.actions > 3 || shape.horizon > 2) {
    throw ConfigError("mebp_exact is limited to S, A <= 3 and H <= 2, got " + to_string(shape));
  }
  if (cfg.mode != CandidateMode::Full && cfg.mode != CandidateMode::EpsCover) {
    throw ConfigError("mebp_exact supports the full and eps-cover candidate modes only");
  }
  const int n_all = models.size();
  ElimConfig ecfg = cfg;
  ecfg.delta = cfg.delta / (std::log2(static_cast<double>(n_all)) + 1.0);
  Rng rng(seed);

  MebpResult result;
  std::vector<int> survivors = all_indices(n_all);
  const std::uint64_t start = sampler.trajectories();
  const int cap = round_cap(n_all);
  std::optional<PolicyCover> cover;
  std::vector<Policy> cover_policies;

  for (int k = 1; k <= cap; ++k) {
    result.rounds = k;
    const int n = static_cast<int>(survivors.size());
    if (n == 1) {
      NESolveReport ne = solve_ne(models[survivors.front()], ne_cfg);
      result.policy = ne.policy;
      result.returned_model = survivors.front();
      result.success = true;
      break;
    }
    if (!cover) {
      cover.emplace(bar_eps, shape);
      if (cfg.mode == CandidateMode::EpsCover) {
        for (std::uint64_t i = 0; i < cover->size(); ++i) cover_policies.push_back(cover->member(i));
      }
    }
    // Cover policy whose central model has the fewest neighbours.
    std::uint64_t argmin = 0;
    int min_size = n + 1;
    for (std::uint64_t i = 0; i < cover->size(); ++i) {
      ConditionedClass cc(models, cover->member(i));
      const int size = cc.central(survivors, cfg.eps0).second;
      if (size < min_size) {
        min_size = size;
        argmin = i;
      }
    }
    if (2 * min_size <= n) {
      ElimRecord stamp;
      stamp.round = k;
      stamp.branch = "if";
      survivors = model_elim(cover->member(argmin), models, survivors, ecfg, sampler, cover_policies,
                             n_all, &result.trace, stamp)
                      .survivors;
      continue;
    }
    BridgePam bridge(models, survivors, cfg.eps0, *cover);
    const NESolveReport br = bridge_policy(bridge, ne_cfg);
    ElimRecord stamp;
    stamp.round = k;
    stamp.branch = "else";
    survivors = model_elim(br.policy, models, survivors, ecfg, sampler, cover_policies, n_all,
                           &result.trace, stamp)
                    .survivors;
    const int pick = survivors[rng.index(static_cast<int>(survivors.size()))];
    if (ne_gap(models[pick], br.policy) <= 0.75 * epsilon) {
      result.policy = br.policy;
      result.success = true;
      break;
    }
  }
  if (!result.success) result.failure = "round limit of " + std::to_string(cap) + " exceeded";
  result.survivors = survivors;
  result.trajectories = sampler.trajectories() - start;
  return result;
}

}  // namespace mfg
