#include "mfg/class_io.hpp"
#include "mfg/dynamics.hpp"
#include "mfg/environments.hpp"
#include "mfg/rng.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

using namespace mfg;

namespace {

void expect_model_invariants(const MeanFieldModel& m, int probes, std::uint64_t seed) {
  Rng rng(seed);
  const Shape shape = m.shape();
  for (int i = 0; i < probes; ++i) {
    const int h = rng.index(shape.horizon);
    const int s = rng.index(shape.states);
    const int a = rng.index(shape.actions);
    const Vector mu = rng.dirichlet(shape.states);
    const Vector p = m.transition(h, s, a, mu);
    ASSERT_EQ(p.size(), shape.states);
    EXPECT_GE(p.minCoeff(), 0.0);
    EXPECT_NEAR(p.sum(), 1.0, 1e-9);
    const double r = m.reward(h, s, a, mu);
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 1.0 / shape.horizon + 1e-12);
  }
}

void expect_freeze_matches_pointwise(const MeanFieldModel& m, std::uint64_t seed) {
  Rng rng(seed);
  const Shape shape = m.shape();
  for (int h = 0; h < shape.horizon; ++h) {
    const Vector mu = rng.dirichlet(shape.states);
    const FrozenStep step = m.freeze(h, mu);
    for (int k = 0; k < 10; ++k) {
      const int s = rng.index(shape.states);
      const int a = rng.index(shape.actions);
      const int row = s * shape.actions + a;
      EXPECT_LT((step.kernel.row(row) - m.transition(h, s, a, mu)).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_NEAR(step.reward(row), m.reward(h, s, a, mu), 1e-14);
    }
  }
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Tabular, InvariantsAndFreeze) {
  const ModelClass models = gen_tabular_class(3, 4, 3, 5, 0.8, 17);
  ASSERT_EQ(models.size(), 5);
  EXPECT_EQ(models.true_index(), 0);
  for (int i = 0; i < models.size(); ++i) {
    expect_model_invariants(models[i], 1000, 100 + i);
    expect_freeze_matches_pointwise(models[i], 200 + i);
  }
}

TEST(Tabular, ZeroSensitivityIsDensityFree) {
  const ModelClass models = gen_tabular_class(2, 3, 2, 2, 0.0, 5);
  Rng rng(2);
  const Vector mu1 = rng.dirichlet(3);
  const Vector mu2 = rng.dirichlet(3);
  EXPECT_EQ(models[1].transition(1, 2, 1, mu1), models[1].transition(1, 2, 1, mu2));
  const LipschitzProbe probe = lipschitz_probe(models[1], 200, 3);
  EXPECT_EQ(probe.transition_ratio, 0.0);
  EXPECT_EQ(probe.reward_ratio, 0.0);
}

TEST(Tabular, ProbeStaysBelowDeclaredConstants) {
  const ModelClass models = gen_tabular_class(2, 3, 3, 3, 0.6, 8);
  for (int i = 0; i < models.size(); ++i) {
    const LipschitzProbe probe = lipschitz_probe(models[i], 500, 10 + i);
    EXPECT_GT(probe.transition_ratio, 0.0);
    EXPECT_LE(probe.transition_ratio, models[i].lipschitz().transition + 1e-9);
    EXPECT_LE(probe.reward_ratio, models[i].lipschitz().reward + 1e-9);
  }
}

TEST(Tabular, SameSeedSameClass) {
  const auto a = class_to_json(gen_tabular_class(2, 2, 2, 3, 0.5, 42)).dump();
  const auto b = class_to_json(gen_tabular_class(2, 2, 2, 3, 0.5, 42)).dump();
  const auto c = class_to_json(gen_tabular_class(2, 2, 2, 3, 0.5, 43)).dump();
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Linear, SmallClassInvariants) {
  LinearSpec spec;
  spec.horizon = 3;
  spec.states = 12;
  spec.actions = 4;
  spec.dim_phi = 3;
  spec.dim_psi = 3;
  spec.models = 6;
  spec.seed = 3;
  const ModelClass models = gen_linear_class(spec);
  ASSERT_EQ(models.size(), 6);
  ASSERT_TRUE(models.true_index().has_value());
  for (int i = 0; i < models.size(); ++i) {
    expect_model_invariants(models[i], 1000, i);
    expect_freeze_matches_pointwise(models[i], 50 + i);
    const auto& lm = dynamic_cast<const LinearModel&>(models[i]);
    EXPECT_EQ(lm.degenerate_rows(), 0u);
  }
}

TEST(Linear, PerturbationMixesTowardFirstMember) {
  LinearSpec spec;
  spec.horizon = 1;
  spec.states = 5;
  spec.actions = 2;
  spec.models = 4;
  spec.beta_max = 0.0;
  spec.seed = 9;
  const ModelClass unmixed = gen_linear_class(spec);
  spec.beta_max = 1.0;
  const ModelClass mixed = gen_linear_class(spec);
  const auto& first = dynamic_cast<const LinearModel&>(mixed[0]);
  EXPECT_EQ(first.psi()[0], dynamic_cast<const LinearModel&>(unmixed[0]).psi()[0]);
  // With beta in (0, 1) every later member sits strictly between its own draw and member 0.
  for (int i = 1; i < 4; ++i) {
    const auto& m = dynamic_cast<const LinearModel&>(mixed[i]);
    const auto& raw = dynamic_cast<const LinearModel&>(unmixed[i]);
    const RowMatrix diff_raw = raw.psi()[0] - first.psi()[0];
    const RowMatrix diff = m.psi()[0] - first.psi()[0];
    const double beta = 1.0 - diff(0, 0) / diff_raw(0, 0);
    EXPECT_GT(beta, 0.0);
    EXPECT_LT(beta, 1.0);
    EXPECT_LT((diff - (1.0 - beta) * diff_raw).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Linear, SingletonClass) {
  LinearSpec spec;
  spec.states = 6;
  spec.actions = 3;
  spec.models = 1;
  const ModelClass models = gen_linear_class(spec);
  EXPECT_EQ(models.size(), 1);
  EXPECT_EQ(models.true_index(), 0);
}

TEST(Linear, ExperimentScaleGeneratesAndIsDeterministic) {
  LinearSpec spec;  // defaults are the experiment scale
  spec.models = 3;
  spec.seed = 5;
  const auto a = class_to_json(gen_linear_class(spec)).dump();
  const auto b = class_to_json(gen_linear_class(spec)).dump();
  EXPECT_EQ(a, b);
  const ModelClass models = gen_linear_class(spec);
  EXPECT_EQ(models.shape().states, 100);
  EXPECT_EQ(models.shape().actions, 50);
  EXPECT_TRUE(models[0].freeze(0, Vector::Constant(100, 0.01)).kernel.is_factored());
}

TEST(Hard, GridSizeIsBinomial) {
  for (int d : {2, 3, 4}) {
    for (int zeta : {1, 3, 5}) {
      // Brute force: count d-tuples of counts summing to zeta.
      int count = 0;
      std::vector<int> c(d, 0);
      while (true) {
        int sum = 0;
        for (int x : c) sum += x;
        if (sum == zeta) ++count;
        int i = d - 1;
        while (i >= 0 && ++c[i] > zeta) c[i--] = 0;
        if (i < 0) break;
      }
      const auto grid = density_grid(d, zeta);
      EXPECT_EQ(static_cast<int>(grid.size()), count);
      for (const auto& v : grid) EXPECT_NEAR(v.sum(), 1.0, 1e-12);
    }
  }
}

TEST(Hard, ZetaAndClassLayout) {
  HardInstanceSpec spec;
  spec.d = 3;
  spec.lipschitz_t = 1.0;
  spec.eps = 1.0 / 25.0;
  spec.models = 20;
  EXPECT_EQ(resolved_zeta(spec), 5);
  const ModelClass models = gen_hard_instance(spec);
  EXPECT_EQ(models.size(), 21);
  EXPECT_TRUE(dynamic_cast<const HardInstanceModel&>(models[20]).is_flat());
  spec.models = 22;
  EXPECT_THROW(gen_hard_instance(spec), ConfigError);
}

TEST(Hard, FarDensityGivesFairCoin) {
  HardInstanceModel m(3, 0.04, 1.0, density_grid(3, 5)[4]);
  Vector far(3);
  far << 1.0, 0.0, 0.0;
  const Vector center = m.center();
  ASSERT_GE((far - center).lpNorm<1>(), 4 * 0.04);
  const Vector p = m.transition(1, 1, 2, far);
  EXPECT_DOUBLE_EQ(p(0), 0.5);
  EXPECT_DOUBLE_EQ(p(1), 0.5);
  EXPECT_NEAR(m.transition(1, 0, 0, center)(0), 0.5 + 2 * 0.04, 1e-15);
}

TEST(Hard, ProbeRespectsDeclaredLipschitz) {
  HardInstanceSpec spec;
  spec.eps = 0.01;
  spec.models = 30;
  const ModelClass models = gen_hard_instance(spec);
  for (int i : {0, 7, 29}) {
    EXPECT_LE(lipschitz_probe(models[i], 10000, i).transition_ratio, 1.0 + 1e-9);
  }
  expect_model_invariants(models[3], 1000, 1);
  expect_freeze_matches_pointwise(models[3], 2);
}

TEST(Hard, CenterPolicyIsOptimalForMeanFieldControl) {
  const double eps = 0.04;
  const auto grid = density_grid(3, 5);
  HardInstanceModel m(3, eps, 1.0, grid[7]);
  const Shape shape = m.shape();
  Policy best = Policy::uniform(shape);
  best.step(0).row(0) = grid[7].transpose();
  const double target = (0.5 + 2 * eps) / 3.0;
  EXPECT_NEAR(conditional_return(m, best, best), target, 1e-12);
  Rng rng(1);
  for (int i = 0; i < 300; ++i) {
    const Policy p = random_policy(shape, rng);
    EXPECT_LE(conditional_return(m, p, p), target + 1e-12);
  }
}

TEST(ClassIo, RoundTripIsBitExact) {
  const std::string path = ::testing::TempDir() + "roundtrip.mfgclass.json";
  LinearSpec spec;
  spec.states = 7;
  spec.actions = 3;
  spec.models = 4;
  spec.seed = 21;
  for (const ModelClass& models :
       {gen_tabular_class(2, 3, 2, 4, 0.3, 1), gen_linear_class(spec), gen_hard_instance(HardInstanceSpec{})}) {
    save_class(models, path);
    const std::string first = slurp(path);
    const ModelClass back = load_class(path);
    save_class(back, path);
    EXPECT_EQ(first, slurp(path));
    EXPECT_EQ(back.true_index(), models.true_index());
    Rng rng(4);
    const Vector mu = rng.dirichlet(models.shape().states);
    for (int i = 0; i < models.size(); ++i) {
      EXPECT_EQ(back[i].transition(0, 1, 1, mu), models[i].transition(0, 1, 1, mu));
      EXPECT_EQ(back[i].reward(0, 1, 1, mu), models[i].reward(0, 1, 1, mu));
    }
  }
  std::remove(path.c_str());
}

TEST(ClassIo, RejectsWrongSchema) {
  auto j = class_to_json(gen_tabular_class(1, 2, 2, 1, 0.1, 1));
  j["schema_version"] = 99;
  EXPECT_THROW(class_from_json(j), ConfigError);
}
