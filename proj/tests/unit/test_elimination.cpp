#include "mfg/discrepancy.hpp"
#include "mfg/elimination.hpp"
#include "mfg/environments.hpp"
#include "mfg/ne_solver.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace mfg;

namespace {

/// Density-free model given by explicit per-step kernels (rows s * A + a) and a flat reward.
class KernelModel final : public MeanFieldModel {
 public:
  KernelModel(Shape shape, Vector initial, std::vector<RowMatrix> kernels, double reward)
      : MeanFieldModel(shape, std::move(initial), {}), kernels_(std::move(kernels)), reward_(reward) {}
  Vector transition(int h, int s, int a, const Vector&) const override {
    return kernels_[h].row(s * shape_.actions + a).transpose();
  }
  double reward(int, int s, int a, const Vector&) const override { return reward_ * (s == a ? 1.0 : 0.5); }
  std::string kind() const override { return "kernel"; }

 private:
  std::vector<RowMatrix> kernels_;
  double reward_;
};

ModelPtr constant_kernel_model(int H, int S, int A, const Vector& row, double reward = 0.1) {
  RowMatrix k(S * A, S);
  for (int r = 0; r < S * A; ++r) k.row(r) = row.transpose();
  return std::make_shared<KernelModel>(Shape{H, S, A}, Vector::Constant(S, 1.0 / S),
                                       std::vector<RowMatrix>(H, k), reward);
}

ElimConfig small_config(double eps0 = 0.05) {
  ElimConfig cfg;
  cfg.eps0 = eps0;
  cfg.eps_tilde = eps0 / 6.0;
  cfg.delta = 0.01;
  cfg.T = 30;
  return cfg;
}

bool nested(const std::vector<ElimRecord>& records) {
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& prev = records[i - 1].survivors;
    const auto& cur = records[i].survivors;
    if (prev.empty()) continue;
    for (int m : cur) {
      if (std::find(prev.begin(), prev.end(), m) == prev.end()) return false;
    }
    if (records[i].models_remaining > records[i - 1].models_remaining) return false;
  }
  return true;
}

}  // namespace

TEST(ElimConfig, DefaultsAndValidation) {
  const ElimConfig cfg = ElimConfig::defaults(1e-3, 0.5, 3, 0.001, 50);
  EXPECT_NEAR(cfg.eps0, 1e-3 / (8.0 * 2.5 * 7.0), 1e-18);
  EXPECT_NEAR(cfg.eps_tilde, cfg.eps0 / 6.0, 1e-18);
  ElimConfig bad = cfg;
  bad.eps_tilde = cfg.eps0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = cfg;
  bad.delta = 1.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = cfg;
  bad.T = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(ElimConfig, CandidateModeNames) {
  for (auto mode : {CandidateMode::NeSet, CandidateMode::EpsCover, CandidateMode::Explicit, CandidateMode::Full}) {
    EXPECT_EQ(candidate_mode_from_string(to_string(mode)), mode);
  }
  EXPECT_THROW(candidate_mode_from_string("everything"), ConfigError);
}

TEST(Reporting, NormalizedGapClamp) {
  EXPECT_DOUBLE_EQ(normalized_gap(0.5, 1.0, 1e-3), 0.5);
  EXPECT_DOUBLE_EQ(normalized_gap(0.5e-3, 1.0, 1e-3), 0.0);
  EXPECT_DOUBLE_EQ(normalized_gap(1e-3, 1.0, 1e-3), 1e-3);
  EXPECT_DOUBLE_EQ(normalized_gap(0.0, 0.0, 1e-3), 0.0);
}

TEST(DiscrepancyTable, MatchesPerCandidateDp) {
  const ModelClass models = gen_tabular_class(2, 3, 2, 5, 0.7, 21);
  Rng rng(4);
  const Policy ref = random_policy(models.shape(), rng);
  std::vector<Policy> cands{random_policy(models.shape(), rng), random_policy(models.shape(), rng), ref};
  const ConditionedClass cc(models, ref);
  const DiscrepancyTable table(cc, all_indices(5), cands);
  double best = -1.0;
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) {
        const auto d = step_discrepancies(cc.frozen(i), cc.frozen(j));
        const double v = evaluate(cc.frozen(i), cands[c], &d);
        EXPECT_NEAR(table.value(c, i, j), v, 1e-12);
        // Path-enumeration oracle for the same quantity.
        EXPECT_NEAR(v, oracle::directed_discrepancy(models[i], models[i], models[j], cands[c], ref), 1e-9);
        best = std::max(best, v);
      }
    }
  }
  const auto arg = table.max_over({0, 2, 4});
  double restricted = -1.0;
  for (int c = 0; c < 3; ++c) {
    for (int i : {0, 2, 4}) {
      for (int j : {0, 2, 4}) restricted = std::max(restricted, table.value(c, i, j));
    }
  }
  EXPECT_DOUBLE_EQ(arg.value, restricted);
  EXPECT_DOUBLE_EQ(table.max_over({3}).value, 0.0);
}

TEST(ModelElim, SingletonReturnsImmediately) {
  const ModelClass models = gen_tabular_class(2, 2, 2, 1, 0.5, 3);
  SamplerState sampler(models.ptr(0), 1);
  const Policy ref = Policy::uniform(models.shape());
  ElimTrace trace;
  const auto out = model_elim(ref, models, {0}, small_config(), sampler, {ref}, 1, &trace);
  EXPECT_EQ(out.survivors, std::vector<int>{0});
  EXPECT_TRUE(out.stopped_by_threshold);
  EXPECT_EQ(out.last_delta_max, 0.0);
  EXPECT_EQ(sampler.trajectories(), 0u);
}

TEST(ModelElim, IdenticalModelsNeverEliminated) {
  const ModelClass base = gen_tabular_class(2, 2, 2, 1, 0.5, 3);
  const ModelClass twins({base.ptr(0), base.ptr(0)}, 0);
  SamplerState sampler(twins.ptr(0), 1);
  const Policy ref = Policy::uniform(twins.shape());
  const auto out = model_elim(ref, twins, {0, 1}, small_config(), sampler, {ref}, 2);
  EXPECT_EQ(out.survivors, (std::vector<int>{0, 1}));
}

TEST(ModelElim, DisjointSupportIsEliminatedAfterFirstSample) {
  const Vector to0 = Vector::Unit(2, 0);
  const Vector to1 = Vector::Unit(2, 1);
  const ModelClass models({constant_kernel_model(2, 2, 2, to0), constant_kernel_model(2, 2, 2, to1)}, 0);
  SamplerState sampler(models.ptr(0), 9);
  const Policy ref = Policy::uniform(models.shape());
  ElimTrace trace;
  const auto out = model_elim(ref, models, {0, 1}, small_config(), sampler, {ref}, 2, &trace);
  EXPECT_EQ(out.survivors, std::vector<int>{0});
  ASSERT_FALSE(trace.records.empty());
  EXPECT_EQ(trace.records.front().models_remaining, 1);
}

TEST(ModelElim, NestedBudgetedAndPostCondition) {
  const ModelClass models = gen_tabular_class(2, 3, 2, 8, 0.5, 17);
  const NESolveConfig ne_cfg{0.05, 1e-3, 2000};
  const auto table = ne_policy_table(models, ne_cfg);
  std::vector<Policy> cands;
  for (const auto& r : table) cands.push_back(r.policy);
  const Policy& ref = table[0].policy;
  cands.push_back(ref);
  ElimConfig cfg = small_config(0.2);
  cfg.T = 10;
  SamplerState sampler(models.ptr(0), 3);
  ElimTrace trace;
  const auto out = model_elim(ref, models, all_indices(8), cfg, sampler, cands, 8, &trace);
  EXPECT_TRUE(nested(trace.records));
  EXPECT_LE(out.trajectories_used, static_cast<std::uint64_t>(2 * 2 * cfg.T));
  EXPECT_EQ(out.trajectories_used, sampler.trajectories());
  if (out.stopped_by_threshold) {
    const ConditionedClass cc(models, ref);
    for (int m : out.survivors) {
      const auto d = step_discrepancies(cc.frozen(0), cc.frozen(m));
      for (const auto& c : cands) {
        EXPECT_LE(evaluate(cc.frozen(0), c, &d), cfg.eps_tilde + 1e-9);
        EXPECT_LE(evaluate(cc.frozen(m), c, &d), cfg.eps_tilde + 1e-9);
      }
    }
  }
  std::ostringstream csv;
  trace.write_csv(csv);
  EXPECT_EQ(csv.str().rfind("round,branch,inner_iter,delta_max,models_remaining,trajectories_total,norm_max_ne_gap\n", 0),
            0u);
}

TEST(ModelElim, FullModeMatchesExhaustiveAdversary) {
  // The exact adversary can only be stronger than any explicit candidate list.
  const ModelClass models = gen_tabular_class(2, 2, 2, 4, 0.6, 8);
  const Policy ref = Policy::uniform(models.shape());
  ElimConfig cfg = small_config(0.05);
  cfg.T = 1;
  cfg.mode = CandidateMode::Full;
  SamplerState full_sampler(models.ptr(0), 1);
  const auto full = model_elim(ref, models, all_indices(4), cfg, full_sampler, {}, 4);
  double exhaustive = 0.0;
  for (const auto& p : oracle::all_deterministic(models.shape())) {
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        exhaustive = std::max(exhaustive, oracle::directed_discrepancy(models[i], models[i], models[j], p, ref));
      }
    }
  }
  EXPECT_NEAR(full.last_delta_max, exhaustive, 1e-9);
}

TEST(Mebp, SingletonReturnsNeWithoutSampling) {
  const ModelClass models = gen_tabular_class(2, 2, 2, 1, 0.5, 3);
  const auto table = ne_policy_table(models, NESolveConfig{});
  SamplerState sampler(models.ptr(0), 1);
  const MebpResult r = mebp_heuristic(models, small_config(), sampler, table);
  EXPECT_TRUE(r.success);
  EXPECT_EQ(r.returned_model, 0);
  EXPECT_EQ(r.trajectories, 0u);
  EXPECT_TRUE(r.policy == table[0].policy);
}

TEST(Mebp, FarModelEliminatedThenTrueNeReturned) {
  const ModelClass models({constant_kernel_model(2, 2, 2, Vector::Unit(2, 0), 0.2),
                           constant_kernel_model(2, 2, 2, Vector::Unit(2, 1), 0.3)},
                          0);
  const auto table = ne_policy_table(models, NESolveConfig{});
  const ElimConfig cfg = small_config(0.05);
  for (const auto& r : table) EXPECT_GT(conditional_model_distance(models[0], models[1], r.policy), cfg.eps0);
  SamplerState sampler(models.ptr(0), 5);
  const MebpResult r = mebp_heuristic(models, cfg, sampler, table);
  ASSERT_TRUE(r.success);
  EXPECT_EQ(r.returned_model, 0);
  EXPECT_EQ(r.rounds, 2);
  EXPECT_EQ(r.trace.records.front().branch, "init");
  EXPECT_TRUE(nested(r.trace.records));
}

TEST(Mebp, HeuristicOnTabularClassFindsApproximateNe) {
  const ModelClass models = gen_tabular_class(2, 3, 2, 12, 0.5, 31).with_true_index(4);
  const NESolveConfig ne_cfg{0.02, 5e-4, 5000};
  const auto table = ne_policy_table(models, ne_cfg);
  const ElimConfig cfg = ElimConfig::defaults(0.05, models.lipschitz().reward, 2, 0.01, 50);
  SamplerState sampler(models.ptr(4), 12);
  const MebpResult r = mebp_heuristic(models, cfg, sampler, table);
  ASSERT_TRUE(r.success) << r.failure;
  EXPECT_LE(ne_gap(models.true_model(), r.policy), 0.05);
  EXPECT_TRUE(std::find(r.survivors.begin(), r.survivors.end(), 4) != r.survivors.end());
  EXPECT_TRUE(nested(r.trace.records));
  for (const auto& rec : r.trace.records) {
    EXPECT_TRUE(rec.norm_max_ne_gap == 0.0 || rec.norm_max_ne_gap >= 1e-3);
  }
}

TEST(MebpExact, ScaleGuardAndSingleton) {
  const ModelClass big = gen_tabular_class(3, 2, 2, 2, 0.5, 1);
  ElimConfig cfg = small_config();
  cfg.mode = CandidateMode::Full;
  SamplerState s1(big.ptr(0), 1);
  EXPECT_THROW(mebp_exact(big, cfg, 1.0, 0.1, s1, NESolveConfig{}, 1), ConfigError);
  const ModelClass one = gen_tabular_class(2, 2, 2, 1, 0.5, 1);
  SamplerState s2(one.ptr(0), 1);
  const MebpResult r = mebp_exact(one, cfg, 1.0, 0.1, s2, NESolveConfig{}, 1);
  EXPECT_TRUE(r.success);
  EXPECT_EQ(r.trajectories, 0u);
}

TEST(MebpExact, SeparatedPairTakesIfBranch) {
  const ModelClass models({constant_kernel_model(2, 2, 2, Vector::Unit(2, 0), 0.2),
                           constant_kernel_model(2, 2, 2, Vector::Unit(2, 1), 0.3)},
                          0);
  ElimConfig cfg = small_config(0.05);
  cfg.mode = CandidateMode::Full;
  SamplerState sampler(models.ptr(0), 2);
  const MebpResult r = mebp_exact(models, cfg, 1.0, 0.1, sampler, NESolveConfig{}, 3);
  ASSERT_TRUE(r.success);
  EXPECT_EQ(r.returned_model, 0);
  ASSERT_FALSE(r.trace.records.empty());
  EXPECT_EQ(r.trace.records.front().branch, "if");
}

TEST(MebpExact, CloneClassTakesElseBranch) {
  const ModelClass base = gen_tabular_class(2, 2, 2, 1, 0.05, 6);
  const ModelClass clones({base.ptr(0), base.ptr(0), base.ptr(0)}, 0);
  ElimConfig cfg = small_config(0.05);
  cfg.mode = CandidateMode::Full;
  const double epsilon = 0.1;
  SamplerState sampler(clones.ptr(0), 2);
  const MebpResult r = mebp_exact(clones, cfg, 1.0, epsilon, sampler, NESolveConfig{0.02, 1e-4, 5000}, 3);
  ASSERT_TRUE(r.success) << r.failure;
  EXPECT_EQ(r.returned_model, -1);
  ASSERT_FALSE(r.trace.records.empty());
  EXPECT_EQ(r.trace.records.front().branch, "else");
  EXPECT_LE(ne_gap(clones[0], r.policy), 0.75 * epsilon);
}
