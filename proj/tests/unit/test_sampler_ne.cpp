#include "mfg/dynamics.hpp"
#include "mfg/environments.hpp"
#include "mfg/ne_solver.hpp"
#include "mfg/rng.hpp"
#include "mfg/sampler.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace mfg;

namespace {

/// A density-dependent toy model whose transitions are deterministic for every density.
class ShiftModel final : public MeanFieldModel {
 public:
  ShiftModel() : MeanFieldModel(Shape{3, 3, 2}, Vector::Unit(3, 1), {}) {}
  Vector transition(int, int s, int a, const Vector&) const override {
    return Vector::Unit(3, (s + a + 1) % 3);
  }
  double reward(int h, int s, int a, const Vector& mu) const override {
    return (0.2 + 0.1 * a + 0.1 * mu(s)) / shape_.horizon + 0.0 * h;
  }
  std::string kind() const override { return "shift"; }
};

/// Two states swapped by a permutation leave transitions and rewards unchanged.
class SymmetricModel final : public MeanFieldModel {
 public:
  SymmetricModel() : MeanFieldModel(Shape{2, 2, 2}, Vector::Constant(2, 0.5), {}) {}
  Vector transition(int, int s, int a, const Vector& mu) const override {
    Vector p(2);
    const double stay = 0.3 + 0.4 * (a == 0 ? 1.0 : 0.0) * mu(s);
    p(s) = stay;
    p(1 - s) = 1.0 - stay;
    return p;
  }
  double reward(int, int s, int a, const Vector& mu) const override {
    return (0.5 * (1.0 - mu(s)) + 0.2 * a) / 2.0 / 1.2;
  }
  std::string kind() const override { return "symmetric"; }
};

}  // namespace

TEST(Rng, SplitStreamsAreReproducibleAndDistinct) {
  Rng a(5);
  Rng b(5);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a(), b());
  Rng s1 = Rng(5).split(3);
  Rng s2 = Rng(5).split(3);
  Rng s3 = Rng(5).split(4);
  const auto x = s1();
  EXPECT_EQ(x, s2());
  EXPECT_NE(x, s3());
  // Splitting does not advance the parent.
  Rng parent(8);
  Rng copy(8);
  (void)parent.split(1);
  EXPECT_EQ(parent(), copy());
}

TEST(Rng, UniformAndCategoricalMoments) {
  Rng rng(11);
  const int n = 200000;
  double sum = 0.0;
  Vector counts = Vector::Zero(3);
  Vector w(3);
  w << 1.0, 2.0, 5.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    counts(rng.categorical(w)) += 1.0;
  }
  EXPECT_NEAR(sum / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
  for (int k = 0; k < 3; ++k) {
    const double p = w(k) / 8.0;
    EXPECT_NEAR(counts(k) / n, p, 4.0 * std::sqrt(p * (1 - p) / n));
  }
  const Vector d = rng.dirichlet(4);
  EXPECT_NEAR(d.sum(), 1.0, 1e-12);
  EXPECT_GE(d.minCoeff(), 0.0);
}

TEST(Sampler, DeterministicModelGivesUniquePath) {
  auto model = std::make_shared<ShiftModel>();
  const Shape shape = model->shape();
  const Policy eval = Policy::deterministic(shape, {{0, 1, 0}, {1, 1, 1}, {0, 0, 0}});
  const Policy ref = Policy::uniform(shape);
  const auto flow = evolve_density(*model, ref);
  for (std::uint64_t seed : {1ULL, 2ULL, 99ULL}) {
    SamplerState sampler(model, seed);
    const Trajectory traj = sampler.query(eval, ref);
    ASSERT_EQ(traj.size(), 3u);
    // s1 = 1, a = 1 -> s2 = 0, a = 1 -> s3 = 2, a = 0 -> s4 = 0.
    EXPECT_EQ(traj[0].s, 1);
    EXPECT_EQ(traj[0].a, 1);
    EXPECT_EQ(traj[0].s_next, 0);
    EXPECT_EQ(traj[1].s_next, 2);
    EXPECT_EQ(traj[2].a, 0);
    EXPECT_EQ(traj[2].s_next, 0);
    EXPECT_NEAR(traj[1].r, model->reward(1, 0, 1, flow[1]), 1e-15);
  }
}

TEST(Sampler, SeedDeterminesSequenceAndCountersTrackQueries) {
  const ModelClass models = gen_tabular_class(2, 3, 2, 1, 0.5, 4);
  Rng rng(1);
  const Policy eval = random_policy(models.shape(), rng);
  const Policy ref = random_policy(models.shape(), rng);
  SamplerState a(models.ptr(0), 77);
  SamplerState b(models.ptr(0), 77);
  for (int i = 0; i < 50; ++i) {
    const auto ta = a.query(eval, ref);
    const auto tb = b.query(eval, ref);
    for (std::size_t h = 0; h < ta.size(); ++h) {
      ASSERT_EQ(ta[h].s, tb[h].s);
      ASSERT_EQ(ta[h].a, tb[h].a);
      ASSERT_EQ(ta[h].s_next, tb[h].s_next);
    }
  }
  EXPECT_EQ(a.queries(), 50u);
  EXPECT_EQ(a.trajectories(), 50u);
}

TEST(Sampler, CachingDoesNotChangeDraws) {
  const ModelClass models = gen_tabular_class(2, 3, 2, 1, 0.9, 6);
  Rng rng(2);
  const Policy eval = random_policy(models.shape(), rng);
  const Policy ref = random_policy(models.shape(), rng);
  SamplerState cached(models.ptr(0), 5);
  SamplerState uncached(models.ptr(0), 5);
  uncached.set_caching(false);
  for (int i = 0; i < 200; ++i) {
    const auto x = cached.query(eval, ref);
    const auto y = uncached.query(eval, ref);
    for (std::size_t h = 0; h < x.size(); ++h) {
      ASSERT_EQ(x[h].s_next, y[h].s_next);
      ASSERT_EQ(x[h].r, y[h].r);
    }
  }
}

TEST(Sampler, StepOneFrequenciesMatchKernel) {
  const ModelClass models = gen_tabular_class(2, 2, 2, 1, 0.7, 12);
  const Shape shape = models.shape();
  Rng rng(3);
  const Policy ref = random_policy(shape, rng);
  const Policy eval = Policy::uniform(shape);
  const FrozenDynamics dyn = freeze_along(models[0], ref);
  SamplerState sampler(models.ptr(0), 31);
  const int n = 100000;
  RowMatrix counts = RowMatrix::Zero(shape.rows(), shape.states);
  for (int i = 0; i < n; ++i) {
    const auto t = sampler.query(eval, ref);
    counts(t[0].s * shape.actions + t[0].a, t[0].s_next) += 1.0;
  }
  for (int r = 0; r < shape.rows(); ++r) {
    const double visits = counts.row(r).sum();
    ASSERT_GT(visits, 1000.0);
    for (int t = 0; t < shape.states; ++t) {
      const double p = dyn.steps[0].kernel.prob(r, t);
      EXPECT_NEAR(counts(r, t) / visits, p, 3.0 * std::sqrt(p * (1 - p) / visits) + 1e-12);
    }
  }
}

TEST(Sampler, LogWritesOneRowPerTransition) {
  const ModelClass models = gen_tabular_class(2, 2, 2, 1, 0.5, 1);
  SamplerState sampler(models.ptr(0), 1);
  std::ostringstream out;
  SamplerState::write_log_header(out);
  sampler.set_log(&out, 7);
  sampler.query(Policy::uniform(models.shape()), Policy::uniform(models.shape()));
  sampler.query(Policy::uniform(models.shape()), Policy::uniform(models.shape()));
  const std::string text = out.str();
  EXPECT_EQ(text.rfind("run_id,query_id,h,s,a,r,s_next\n", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 2 * 2);
}

TEST(NeSolver, SingleActionConvergesImmediately) {
  const ModelClass models = gen_tabular_class(2, 3, 1, 1, 0.5, 1);
  const NESolveReport r = solve_ne(models[0], NESolveConfig{});
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_NEAR(r.gap, 0.0, 1e-15);
}

TEST(NeSolver, DensityFreeModelReachesOptimalValue) {
  const ModelClass models = gen_tabular_class(3, 3, 2, 1, 0.0, 4);
  const NESolveConfig cfg{0.02, 1e-6, 5000};
  const NESolveReport r = solve_ne(models[0], cfg);
  ASSERT_TRUE(r.converged);
  EXPECT_LE(r.gap, 1e-6);
  // Single-agent value iteration written out directly.
  const Shape shape = models.shape();
  const Vector mu = Vector::Constant(shape.states, 1.0 / shape.states);
  Vector v = Vector::Zero(shape.states);
  for (int h = shape.horizon - 1; h >= 0; --h) {
    Vector next(shape.states);
    for (int s = 0; s < shape.states; ++s) {
      double best = -1e300;
      for (int a = 0; a < shape.actions; ++a) {
        best = std::max(best, models[0].reward(h, s, a, mu) + models[0].transition(h, s, a, mu).dot(v));
      }
      next(s) = best;
    }
    v = next;
  }
  EXPECT_NEAR(conditional_return(models[0], r.policy, r.policy), models[0].initial().dot(v), 1e-6);
}

TEST(NeSolver, ReportInvariants) {
  const ModelClass models = gen_tabular_class(2, 3, 3, 1, 1.0, 9);
  const NESolveReport r = solve_ne(models[0], NESolveConfig{0.05, 1e-3, 3000});
  ASSERT_EQ(static_cast<int>(r.gap_history.size()), r.iterations);
  EXPECT_NEAR(r.gap, *std::min_element(r.gap_history.begin(), r.gap_history.end()), 1e-12);
  EXPECT_NEAR(r.gap, ne_gap(models[0], r.policy), 1e-12);
  if (r.converged) EXPECT_LE(r.gap, 1e-3);
  const NESolveReport capped = solve_ne(models[0], NESolveConfig{0.05, 1e-12, 3});
  EXPECT_FALSE(capped.converged);
  EXPECT_EQ(capped.iterations, 3);
}

TEST(NeSolver, RejectsBadConfig) {
  const ModelClass models = gen_tabular_class(1, 2, 2, 1, 0.5, 1);
  EXPECT_THROW(solve_ne(models[0], NESolveConfig{0.0, 1e-3, 10}), ConfigError);
  EXPECT_THROW(solve_ne(models[0], NESolveConfig{0.1, 0.0, 10}), ConfigError);
}

TEST(NeSolver, UniformInitKeepsStateSymmetry) {
  const SymmetricModel model;
  const NESolveReport r = solve_ne(model, NESolveConfig{0.02, 1e-4, 5000});
  for (int h = 0; h < 2; ++h) {
    EXPECT_NEAR(r.policy(h, 0, 0), r.policy(h, 1, 0), 1e-12);
    EXPECT_NEAR(r.policy(h, 0, 1), r.policy(h, 1, 1), 1e-12);
  }
}

TEST(NeSolver, TableIsDeterministicForDuplicates) {
  const ModelClass base = gen_tabular_class(2, 2, 2, 1, 0.8, 2);
  const ModelClass twins({base.ptr(0), base.ptr(0)}, 0);
  const auto table = ne_policy_table(twins, NESolveConfig{});
  ASSERT_EQ(table.size(), 2u);
  EXPECT_TRUE(table[0].policy == table[1].policy);
  EXPECT_EQ(table[0].iterations, table[1].iterations);
  const auto back = ne_table_from_json(ne_table_to_json(table));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_TRUE(back[1].policy == table[1].policy);
  EXPECT_EQ(back[1].gap, table[1].gap);
}
