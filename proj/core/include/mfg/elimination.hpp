#pragma once

#include "mfg/bridge.hpp"
#include "mfg/discrepancy.hpp"
#include "mfg/dynamics.hpp"
#include "mfg/ne_solver.hpp"
#include "mfg/sampler.hpp"

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace mfg {

/// How the adversary policy of the elimination test is chosen.
enum class CandidateMode {
  NeSet,     // NE policies of the current survivors plus the reference
  EpsCover,  // every member of a policy cover plus the reference
  Explicit,  // caller-supplied list plus the reference
  Full,      // exact maximisation over all policies by dynamic programming
};

std::string to_string(CandidateMode mode);
CandidateMode candidate_mode_from_string(const std::string& name);

struct ElimConfig {
  double eps0 = 0.0;
  double eps_tilde = 0.0;
  double delta = 0.001;
  int T = 50;
  CandidateMode mode = CandidateMode::NeSet;

  void validate() const;
  /// eps0 = eps / (8 (1 + L_r H)(H + 4)), eps_tilde = eps0 / 6.
  static ElimConfig defaults(double epsilon, double reward_lipschitz, int horizon, double delta,
                             int T);
};

struct ElimRecord {
  int round = 0;
  std::string branch;       // init | if | else
  int ref_model = -1;       // class index whose NE is the reference, -1 if not an NE policy
  int inner_iter = 0;
  double delta_max = 0.0;   // NaN on the init row
  int models_remaining = 0;
  std::uint64_t trajectories_total = 0;
  double norm_max_ne_gap = 0.0;
  std::vector<int> survivors;
};

struct ElimTrace {
  std::vector<ElimRecord> records;

  static void write_csv_header(std::ostream& out);
  void write_csv(std::ostream& out) const;
};

/// Per-iteration observer: receives the survivors after each inner iteration.
using SurvivorReporter = std::function<double(const std::vector<int>&)>;

struct ElimOutcome {
  std::vector<int> survivors;
  int iterations = 0;               // inner iterations that sampled
  double last_delta_max = 0.0;
  bool stopped_by_threshold = false;
  std::uint64_t trajectories_used = 0;
  DiscrepancyTable::Argmax last_argmax;
};

/// Likelihood-ratio elimination of `pool` under reference `ref`.
///
/// `candidates` must contain `ref` unless cfg.mode is Full, in which case it is ignored.
/// `class_size` enters the confidence threshold log(H T |M| / delta).
ElimOutcome model_elim(const Policy& ref, const ModelClass& models, const std::vector<int>& pool,
                       const ElimConfig& cfg, SamplerState& sampler,
                       const std::vector<Policy>& candidates, int class_size,
                       ElimTrace* trace = nullptr, const ElimRecord& stamp = {},
                       const SurvivorReporter& reporter = nullptr);

struct MebpResult {
  Policy policy;
  bool success = false;
  int returned_model = -1;  // model whose NE was returned, -1 for a bridge policy
  int rounds = 0;
  std::vector<int> survivors;
  std::uint64_t trajectories = 0;
  std::string failure;
  ElimTrace trace;
};

struct ReportingOptions {
  /// Gap normaliser and clamp threshold for the norm_max_ne_gap column.
  double clamp_below = 1e-3;
};

/// Heuristic driver: references are the members' own NE policies; candidates are the NE set.
MebpResult mebp_heuristic(const ModelClass& models, const ElimConfig& cfg, SamplerState& sampler,
                          const std::vector<NESolveReport>& ne_table,
                          const ReportingOptions& reporting = {});

/// Exact driver for toy classes (S, A <= 3, H <= 2): cover search and bridge policies.
MebpResult mebp_exact(const ModelClass& models, const ElimConfig& cfg, double bar_eps,
                      double epsilon, SamplerState& sampler, const NESolveConfig& ne_cfg,
                      std::uint64_t seed);

/// Normalised worst gap Gap_t / Gap_0, set to 0 when below `clamp_below`.
double normalized_gap(double gap_t, double gap_0, double clamp_below);

}  // namespace mfg
