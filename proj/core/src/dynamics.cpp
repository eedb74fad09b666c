#include "mfg/dynamics.hpp"
#include "mfg/parallel.hpp"

#include <algorithm>
#include <string>

namespace mfg {

namespace {

std::atomic<int> g_max_threads{1};

void check_policy_shape(const Shape& shape, const Policy& policy, const char* what) {
  if (policy.shape() != shape) {
    throw ConfigError(std::string(what) + ": policy shape " + to_string(policy.shape()) +
                      " does not match model shape " + to_string(shape));
  }
}

const Vector& step_reward(const FrozenDynamics& dyn, const std::vector<Vector>* rewards, int h) {
  return rewards ? (*rewards)[h] : dyn.steps[h].reward;
}

}  // namespace

int max_threads() { return g_max_threads.load(); }
void set_max_threads(int n) { g_max_threads.store(std::max(1, n)); }

Vector row_weights(const Vector& mu, const RowMatrix& pi) {
  const Eigen::Index S = pi.rows();
  const Eigen::Index A = pi.cols();
  Vector w(S * A);
  for (Eigen::Index s = 0; s < S; ++s) {
    w.segment(s * A, A) = mu(s) * pi.row(s).transpose();
  }
  return w;
}

DensityFlow state_flow(const FrozenDynamics& dyn, const Policy& policy) {
  check_policy_shape(dyn.shape, policy, "state_flow");
  DensityFlow flow;
  flow.reserve(dyn.shape.horizon);
  flow.push_back(dyn.initial);
  for (int h = 0; h + 1 < dyn.shape.horizon; ++h) {
    flow.push_back(dyn.steps[h].kernel.push_forward(row_weights(flow.back(), policy.step(h))));
  }
  return flow;
}

double evaluate(const FrozenDynamics& dyn, const Policy& policy, const std::vector<Vector>* rewards) {
  check_policy_shape(dyn.shape, policy, "evaluate");
  double total = 0.0;
  Vector mu = dyn.initial;
  for (int h = 0; h < dyn.shape.horizon; ++h) {
    const Vector w = row_weights(mu, policy.step(h));
    total += w.dot(step_reward(dyn, rewards, h));
    if (h + 1 < dyn.shape.horizon) mu = dyn.steps[h].kernel.push_forward(w);
  }
  return total;
}

BestResponse optimize(const FrozenDynamics& dyn, const std::vector<Vector>* rewards,
                      const ActionRanges* ranges) {
  const Shape& shape = dyn.shape;
  const int S = shape.states;
  const int A = shape.actions;
  if (ranges && static_cast<int>(ranges->size()) != S) {
    throw ConfigError("optimize: action ranges must list every state");
  }
  Policy policy(shape);
  Vector value = Vector::Zero(S);
  for (int h = shape.horizon - 1; h >= 0; --h) {
    Vector q = step_reward(dyn, rewards, h);
    if (h + 1 < shape.horizon) q += dyn.steps[h].kernel.expect(value);
    RowMatrix& pi = policy.step(h);
    for (int s = 0; s < S; ++s) {
      int lo = 0;
      int hi = A;
      if (ranges) {
        lo = (*ranges)[s].first;
        hi = (*ranges)[s].second;
        if (lo < 0 || hi > A || lo >= hi) throw ConfigError("optimize: empty action range");
      }
      int best = lo;
      for (int a = lo + 1; a < hi; ++a) {
        if (q(s * A + a) > q(s * A + best)) best = a;
      }
      pi(s, best) = 1.0;
      value(s) = q(s * A + best);
    }
  }
  return BestResponse{std::move(policy), dyn.initial.dot(value)};
}

double max_expected_discrepancy(const FrozenDynamics& dyn, const std::vector<Vector>& discrepancy) {
  return optimize(dyn, &discrepancy).value;
}

std::vector<Vector> step_discrepancies(const FrozenDynamics& a, const FrozenDynamics& b) {
  if (a.shape != b.shape) throw ConfigError("step_discrepancies: shapes differ");
  std::vector<Vector> out;
  out.reserve(a.shape.horizon);
  for (int h = 0; h < a.shape.horizon; ++h) {
    out.push_back(row_l1_distances(a.steps[h].kernel, b.steps[h].kernel));
  }
  return out;
}

double frozen_distance(const FrozenDynamics& a, const FrozenDynamics& b) {
  const auto d = step_discrepancies(a, b);
  return std::max(max_expected_discrepancy(a, d), max_expected_discrepancy(b, d));
}

DensityFlow evolve_density(const MeanFieldModel& model, const Policy& policy) {
  DensityFlow flow;
  freeze_along(model, policy, &flow);
  return flow;
}

FrozenDynamics freeze_along(const MeanFieldModel& model, const Policy& ref, DensityFlow* flow) {
  const Shape& shape = model.shape();
  check_policy_shape(shape, ref, "freeze_along");
  FrozenDynamics dyn{shape, model.initial(), {}};
  dyn.steps.reserve(shape.horizon);
  DensityFlow local;
  DensityFlow& mus = flow ? *flow : local;
  mus.clear();
  mus.push_back(model.initial());
  for (int h = 0; h < shape.horizon; ++h) {
    dyn.steps.push_back(model.freeze(h, mus.back()));
    if (h + 1 < shape.horizon) {
      mus.push_back(dyn.steps.back().kernel.push_forward(row_weights(mus.back(), ref.step(h))));
    }
  }
  return dyn;
}

double conditional_return(const MeanFieldModel& model, const Policy& eval, const Policy& ref) {
  check_policy_shape(model.shape(), eval, "conditional_return");
  return evaluate(freeze_along(model, ref), eval);
}

BestResponse best_response(const MeanFieldModel& model, const Policy& ref) {
  return optimize(freeze_along(model, ref));
}

double ne_gap(const FrozenDynamics& dyn, const Policy& policy) {
  return optimize(dyn).value - evaluate(dyn, policy);
}

double ne_gap(const MeanFieldModel& model, const Policy& policy) {
  return ne_gap(freeze_along(model, policy), policy);
}

double conditional_model_distance(const MeanFieldModel& m, const MeanFieldModel& n,
                                  const Policy& ref) {
  if (m.shape() != n.shape()) throw ConfigError("conditional_model_distance: shapes differ");
  return frozen_distance(freeze_along(m, ref), freeze_along(n, ref));
}

ConditionedClass::ConditionedClass(const ModelClass& models, Policy ref)
    : models_(&models),
      ref_(std::move(ref)),
      frozen_(models.size()),
      flows_(models.size()),
      ready_(models.size(), 0) {
  check_policy_shape(models.shape(), ref_, "ConditionedClass");
}

const FrozenDynamics& ConditionedClass::frozen(int i) const {
  if (!ready_[i]) {
    frozen_[i] = freeze_along((*models_)[i], ref_, &flows_[i]);
    ready_[i] = 1;
  }
  return frozen_[i];
}

const DensityFlow& ConditionedClass::flow(int i) const {
  frozen(i);
  return flows_[i];
}

double ConditionedClass::distance(int i, int j) const {
  if (i == j) return 0.0;
  return frozen_distance(frozen(i), frozen(j));
}

bool ConditionedClass::within(int i, int j, double eps) const {
  if (i == j) return eps >= 0.0;
  // The adversary that plays action 0 at the first step already collects this much.
  const FrozenDynamics& a = frozen(i);
  const FrozenDynamics& b = frozen(j);
  const int A = a.shape.actions;
  double lower = 0.0;
  for (int s = 0; s < a.shape.states; ++s) {
    const double weight = a.initial(s);
    if (weight <= 0.0) continue;
    const Eigen::Index r = static_cast<Eigen::Index>(s) * A;
    lower += weight * (a.steps[0].kernel.row(r) - b.steps[0].kernel.row(r)).lpNorm<1>();
    if (lower > eps) return false;
  }
  return distance(i, j) <= eps;
}

std::vector<int> ConditionedClass::neighborhood(int center, const std::vector<int>& pool,
                                                double eps) const {
  std::vector<int> out;
  for (int j : pool) {
    if (within(center, j, eps)) out.push_back(j);
  }
  return out;
}

std::pair<int, int> ConditionedClass::central(const std::vector<int>& pool, double eps) const {
  if (pool.empty()) throw ConfigError("central: empty pool");
  int best = pool.front();
  int best_size = -1;
  for (int i : pool) {
    const int size = static_cast<int>(neighborhood(i, pool, eps).size());
    if (size > best_size) {
      best = i;
      best_size = size;
    }
  }
  return {best, best_size};
}

std::vector<int> all_indices(int n) {
  std::vector<int> out(n);
  for (int i = 0; i < n; ++i) out[i] = i;
  return out;
}

std::vector<int> neighborhood(const ModelClass& models, int center, const Policy& ref, double eps0) {
  if (center < 0 || center >= models.size()) throw ConfigError("neighborhood: index out of range");
  if (eps0 < 0.0) throw ConfigError("neighborhood: eps0 must be nonnegative");
  ConditionedClass cc(models, ref);
  return cc.neighborhood(center, all_indices(models.size()), eps0);
}

std::pair<int, int> central_model(const ModelClass& models, const Policy& ref, double eps0) {
  ConditionedClass cc(models, ref);
  return cc.central(all_indices(models.size()), eps0);
}

}  // namespace mfg
