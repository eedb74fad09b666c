#include "mfg/multitype.hpp"
#include "mfg/class_io.hpp"

#include <algorithm>
#include <cmath>

namespace mfg {

namespace {

void softmax_rows(RowMatrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
}

RowMatrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double lo, double hi, Rng& rng) {
  RowMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
  }
  return m;
}

/// Inverse CDF with an externally supplied uniform, so paired arms can share draws.
int inverse_cdf(const Vector& weights, double u) {
  const double total = weights.sum();
  const double target = u * total;
  double acc = 0.0;
  int last = 0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights(i) <= 0.0) continue;
    acc += weights(i);
    last = static_cast<int>(i);
    if (target < acc) return last;
  }
  return last;
}

Shape lifted_shape(const MultiTypeModel& mt) {
  Shape shape{mt.horizon(), 0, 0};
  for (int w = 0; w < mt.types(); ++w) {
    shape.states += mt.type_shape(w).states;
    shape.actions += mt.type_shape(w).actions;
  }
  return shape;
}

Vector lifted_initial(const MultiTypeModel& mt) {
  Vector mu(lifted_shape(mt).states);
  int offset = 0;
  for (int w = 0; w < mt.types(); ++w) {
    const int n = mt.type_shape(w).states;
    mu.segment(offset, n) = mt.initial(w) / mt.types();
    offset += n;
  }
  return mu;
}

const MultiTypeModel& checked(const MultiTypePtr& mt) {
  if (!mt) throw ConfigError("lift needs a multi-type model");
  return *mt;
}

}  // namespace

// ---- MultiTypeModel ----

MultiTypeModel::MultiTypeModel(int horizon, std::vector<TypeShape> types, std::vector<Vector> initial,
                               LipschitzConstants lipschitz)
    : horizon_(horizon), types_(std::move(types)), initial_(std::move(initial)), lipschitz_(lipschitz) {
  if (horizon_ <= 0 || types_.empty()) throw ConfigError("multi-type model needs H >= 1 and W >= 1");
  if (initial_.size() != types_.size()) throw ConfigError("one initial distribution per type required");
  for (std::size_t w = 0; w < types_.size(); ++w) {
    if (types_[w].states <= 0 || types_[w].actions <= 0) throw ConfigError("type sizes must be positive");
    if (initial_[w].size() != types_[w].states || std::abs(initial_[w].sum() - 1.0) > 1e-9 ||
        (initial_[w].array() < 0.0).any()) {
      throw ConfigError("type initial distribution must lie on the simplex");
    }
  }
}

FrozenStep MultiTypeModel::freeze(int w, int h, const JointDensity& mu) const {
  const TypeShape& t = types_.at(w);
  RowMatrix p(t.states * t.actions, t.states);
  Vector r(t.states * t.actions);
  for (int s = 0; s < t.states; ++s) {
    for (int a = 0; a < t.actions; ++a) {
      p.row(s * t.actions + a) = transition(w, h, s, a, mu).transpose();
      r(s * t.actions + a) = reward(w, h, s, a, mu);
    }
  }
  return FrozenStep{StepKernel::dense(std::move(p)), std::move(r)};
}

TabularMultiTypeModel::TabularMultiTypeModel(int horizon, std::vector<TypeShape> types,
                                             std::vector<Vector> initial, double sensitivity,
                                             std::vector<TypeParams> params)
    : MultiTypeModel(horizon, std::move(types), std::move(initial), {}),
      sensitivity_(sensitivity),
      params_(std::move(params)) {
  total_states_ = 0;
  for (const auto& t : types_) total_states_ += t.states;
  if (params_.size() != types_.size()) throw ConfigError("one parameter set per type required");
  double mix_max = 0.0;
  double tilt_max = 0.0;
  for (std::size_t w = 0; w < types_.size(); ++w) {
    const TypeParams& p = params_[w];
    const Eigen::Index rows = static_cast<Eigen::Index>(types_[w].states) * types_[w].actions;
    if (static_cast<int>(p.logits.size()) != horizon_ || static_cast<int>(p.mixing.size()) != horizon_ ||
        static_cast<int>(p.reward_base.size()) != horizon_ ||
        static_cast<int>(p.reward_tilt.size()) != horizon_) {
      throw ConfigError("multi-type parameters need one entry per step");
    }
    for (int h = 0; h < horizon_; ++h) {
      if (p.logits[h].rows() != rows || p.logits[h].cols() != types_[w].states ||
          p.mixing[h].rows() != types_[w].states || p.mixing[h].cols() != total_states_ ||
          p.reward_base[h].size() != rows || p.reward_tilt[h].rows() != rows ||
          p.reward_tilt[h].cols() != total_states_) {
        throw ConfigError("multi-type parameter block has the wrong shape");
      }
      mix_max = std::max(mix_max, p.mixing[h].cwiseAbs().maxCoeff());
      tilt_max = std::max(tilt_max, p.reward_tilt[h].cwiseAbs().maxCoeff());
    }
  }
  // Distances between joint densities are sums of per-type l1 distances.
  lipschitz_.transition = 2.0 * std::abs(sensitivity_) * mix_max;
  lipschitz_.reward = std::abs(sensitivity_) * tilt_max / horizon_;
}

Vector TabularMultiTypeModel::concat(const JointDensity& mu) const {
  if (static_cast<int>(mu.size()) != types()) throw ConfigError("joint density needs one entry per type");
  Vector out(total_states_);
  int offset = 0;
  for (int w = 0; w < types(); ++w) {
    if (mu[w].size() != types_[w].states) throw ConfigError("joint density block has the wrong length");
    out.segment(offset, types_[w].states) = mu[w];
    offset += types_[w].states;
  }
  return out;
}

Vector TabularMultiTypeModel::transition(int w, int h, int s, int a, const JointDensity& mu) const {
  const TypeParams& p = params_.at(w);
  RowMatrix row = p.logits[h].row(s * types_[w].actions + a);
  row += sensitivity_ * (p.mixing[h] * concat(mu)).transpose();
  softmax_rows(row);
  return row.transpose();
}

double TabularMultiTypeModel::reward(int w, int h, int s, int a, const JointDensity& mu) const {
  const TypeParams& p = params_.at(w);
  const int r = s * types_[w].actions + a;
  const double raw = p.reward_base[h](r) + sensitivity_ * p.reward_tilt[h].row(r).dot(concat(mu));
  return std::clamp(raw, 0.0, 1.0) / horizon_;
}

FrozenStep TabularMultiTypeModel::freeze(int w, int h, const JointDensity& mu) const {
  const TypeParams& p = params_.at(w);
  const Vector joint = concat(mu);
  RowMatrix k = p.logits[h];
  k.rowwise() += sensitivity_ * (p.mixing[h] * joint).transpose();
  softmax_rows(k);
  const Vector raw = p.reward_base[h] + sensitivity_ * (p.reward_tilt[h] * joint);
  return FrozenStep{StepKernel::dense(std::move(k)), raw.cwiseMax(0.0).cwiseMin(1.0) / horizon_};
}

std::shared_ptr<TabularMultiTypeModel> gen_multitype(const MultiTypeSpec& spec) {
  if (spec.types.empty()) throw ConfigError("multi-type spec needs at least one type");
  Rng rng(spec.seed);
  int total = 0;
  for (const auto& t : spec.types) total += t.states;
  std::vector<Vector> initial;
  std::vector<TabularMultiTypeModel::TypeParams> params;
  for (std::size_t w = 0; w < spec.types.size(); ++w) {
    Rng trng = rng.split(w);
    const TypeShape& t = spec.types[w];
    if (t.states <= 0 || t.actions <= 0) throw ConfigError("type sizes must be positive");
    const int rows = t.states * t.actions;
    initial.push_back(trng.dirichlet(t.states));
    TabularMultiTypeModel::TypeParams p;
    for (int h = 0; h < spec.horizon; ++h) {
      p.logits.push_back(uniform_matrix(rows, t.states, -spec.logit_scale, spec.logit_scale, trng));
      p.mixing.push_back(uniform_matrix(t.states, total, -1.0, 1.0, trng));
      Vector base(rows);
      for (int r = 0; r < rows; ++r) base(r) = spec.zero_reward ? 0.0 : trng.uniform(0.2, 0.8);
      p.reward_base.push_back(base);
      RowMatrix tilt = uniform_matrix(rows, total, -0.2, 0.2, trng);
      if (spec.zero_reward) tilt.setZero();
      p.reward_tilt.push_back(tilt);
    }
    params.push_back(std::move(p));
  }
  return std::make_shared<TabularMultiTypeModel>(spec.horizon, spec.types, std::move(initial),
                                                 spec.sensitivity, std::move(params));
}

// ---- typed quantities ----

void validate_joint_policy(const MultiTypeModel& mt, const JointPolicy& joint) {
  if (static_cast<int>(joint.size()) != mt.types()) throw ConfigError("joint policy needs one policy per type");
  for (int w = 0; w < mt.types(); ++w) {
    if (joint[w].shape() != mt.shape(w)) throw ConfigError("type policy has the wrong shape");
  }
}

std::vector<FrozenDynamics> mt_freeze_with_flow(const MultiTypeModel& mt, const JointPolicy& joint,
                                                std::vector<JointDensity>* flow) {
  validate_joint_policy(mt, joint);
  const int W = mt.types();
  std::vector<FrozenDynamics> dyn(W);
  JointDensity mu(W);
  for (int w = 0; w < W; ++w) {
    dyn[w] = FrozenDynamics{mt.shape(w), mt.initial(w), {}};
    mu[w] = mt.initial(w);
  }
  if (flow) flow->clear();
  for (int h = 0; h < mt.horizon(); ++h) {
    if (flow) flow->push_back(mu);
    JointDensity next(W);
    for (int w = 0; w < W; ++w) {
      dyn[w].steps.push_back(mt.freeze(w, h, mu));
      next[w] = dyn[w].steps.back().kernel.push_forward(row_weights(mu[w], joint[w].step(h)));
    }
    mu = std::move(next);
  }
  return dyn;
}

std::vector<JointDensity> mt_evolve(const MultiTypeModel& mt, const JointPolicy& joint) {
  std::vector<JointDensity> flow;
  mt_freeze_with_flow(mt, joint, &flow);
  return flow;
}

std::vector<FrozenDynamics> mt_freeze(const MultiTypeModel& mt, const JointPolicy& joint) {
  return mt_freeze_with_flow(mt, joint, nullptr);
}

double typed_return(const MultiTypeModel& mt, int w, const Policy& deviation, const JointPolicy& joint) {
  if (w < 0 || w >= mt.types()) throw ConfigError("type index out of range");
  return evaluate(mt_freeze(mt, joint)[w], deviation);
}

std::vector<double> typed_ne_gaps(const MultiTypeModel& mt, const JointPolicy& joint) {
  const auto dyn = mt_freeze(mt, joint);
  std::vector<double> gaps(mt.types());
  for (int w = 0; w < mt.types(); ++w) gaps[w] = ne_gap(dyn[w], joint[w]);
  return gaps;
}

// ---- lifting ----

LiftedModel::LiftedModel(MultiTypePtr mt)
    : MeanFieldModel(lifted_shape(checked(mt)), lifted_initial(*mt),
                     LipschitzConstants{mt->lipschitz().transition, mt->lipschitz().reward}),
      mt_(std::move(mt)) {
  int so = 0;
  int ao = 0;
  for (int w = 0; w < mt_->types(); ++w) {
    const TypeShape& t = mt_->type_shape(w);
    state_offset_.push_back(so);
    action_offset_.push_back(ao);
    for (int s = 0; s < t.states; ++s) {
      state_type_.push_back(w);
      ranges_.emplace_back(ao, ao + t.actions);
    }
    for (int a = 0; a < t.actions; ++a) action_type_.push_back(w);
    so += t.states;
    ao += t.actions;
  }
}

JointDensity LiftedModel::split_density(const Vector& mu) const {
  JointDensity out(types());
  for (int w = 0; w < types(); ++w) {
    const int n = mt_->type_shape(w).states;
    const Vector block = mu.segment(state_offset_[w], n);
    const double mass = block.sum();
    out[w] = mass > 0.0 ? Vector(block / mass) : Vector::Constant(n, 1.0 / n);
  }
  return out;
}

Vector LiftedModel::transition(int h, int s, int a, const Vector& mu) const {
  const int w = state_type_.at(s);
  if (action_type_.at(a) != w) return Vector::Constant(shape_.states, 1.0 / shape_.states);
  Vector out = Vector::Zero(shape_.states);
  out.segment(state_offset_[w], mt_->type_shape(w).states) =
      mt_->transition(w, h, s - state_offset_[w], a - action_offset_[w], split_density(mu));
  return out;
}

double LiftedModel::reward(int h, int s, int a, const Vector& mu) const {
  const int w = state_type_.at(s);
  if (action_type_.at(a) != w) return 0.0;
  return mt_->reward(w, h, s - state_offset_[w], a - action_offset_[w], split_density(mu));
}

FrozenStep LiftedModel::freeze(int h, const Vector& mu) const {
  const int S = shape_.states;
  const int A = shape_.actions;
  RowMatrix p = RowMatrix::Constant(S * A, S, 1.0 / S);
  Vector r = Vector::Zero(S * A);
  const JointDensity joint = split_density(mu);
  for (int w = 0; w < types(); ++w) {
    const TypeShape& t = mt_->type_shape(w);
    const FrozenStep typed = mt_->freeze(w, h, joint);
    const RowMatrix dense = typed.kernel.to_dense();
    for (int s = 0; s < t.states; ++s) {
      for (int a = 0; a < t.actions; ++a) {
        const int row = (state_offset_[w] + s) * A + action_offset_[w] + a;
        p.row(row).setZero();
        p.row(row).segment(state_offset_[w], t.states) = dense.row(s * t.actions + a);
        r(row) = typed.reward(s * t.actions + a);
      }
    }
  }
  return FrozenStep{StepKernel::dense(std::move(p)), std::move(r)};
}

LiftedModel lift(MultiTypePtr mt) { return LiftedModel(std::move(mt)); }

Policy lift_policy(const LiftedModel& lifted, const JointPolicy& joint) {
  validate_joint_policy(lifted.base(), joint);
  Policy out(lifted.shape());
  for (int w = 0; w < lifted.types(); ++w) {
    const TypeShape& t = lifted.base().type_shape(w);
    for (int h = 0; h < lifted.shape().horizon; ++h) {
      out.step(h).block(lifted.state_offsets()[w], lifted.action_offsets()[w], t.states, t.actions) =
          joint[w].step(h);
    }
  }
  return out;
}

bool is_constrained(const LiftedModel& lifted, const Policy& policy, double tol) {
  if (policy.shape() != lifted.shape()) return false;
  const auto& ranges = lifted.constrained_ranges();
  for (int h = 0; h < policy.horizon(); ++h) {
    for (int s = 0; s < lifted.shape().states; ++s) {
      double off = 0.0;
      for (int a = 0; a < lifted.shape().actions; ++a) {
        if (a < ranges[s].first || a >= ranges[s].second) off += std::abs(policy(h, s, a));
      }
      if (off > tol) return false;
    }
  }
  return true;
}

JointPolicy lower_policy(const LiftedModel& lifted, const Policy& policy) {
  if (!is_constrained(lifted, policy)) {
    throw ConfigError("policy places mass on actions outside its state's type block");
  }
  JointPolicy out;
  for (int w = 0; w < lifted.types(); ++w) {
    const TypeShape& t = lifted.base().type_shape(w);
    Policy p(lifted.base().shape(w));
    for (int h = 0; h < policy.horizon(); ++h) {
      p.step(h) = policy.step(h).block(lifted.state_offsets()[w], lifted.action_offsets()[w], t.states,
                                       t.actions);
    }
    out.push_back(std::move(p));
  }
  return out;
}

double constrained_ne_gap(const LiftedModel& lifted, const Policy& policy) {
  if (!is_constrained(lifted, policy)) throw ConfigError("constrained_ne_gap: policy is not constrained");
  const FrozenDynamics dyn = freeze_along(lifted, policy);
  return optimize(dyn, nullptr, &lifted.constrained_ranges()).value - evaluate(dyn, policy);
}

NESolveReport solve_constrained_ne(const LiftedModel& lifted, const NESolveConfig& cfg) {
  JointPolicy uniform;
  for (int w = 0; w < lifted.types(); ++w) uniform.push_back(Policy::uniform(lifted.base().shape(w)));
  return solve_ne([&lifted](const Policy& ref) { return freeze_along(lifted, ref); },
                  lift_policy(lifted, uniform), cfg, &lifted.constrained_ranges());
}

// ---- sampling ----

MultiTypeSampler::MultiTypeSampler(MultiTypePtr mt, std::uint64_t seed) : mt_(std::move(mt)), base_(seed) {
  if (!mt_) throw ConfigError("multi-type sampler needs a model");
}

Trajectory MultiTypeSampler::query_mt(const JointPolicy& joint, int w, const Policy& deviation) {
  if (w < 0 || w >= mt_->types()) throw ConfigError("query_mt: type index out of range");
  const auto dyn = mt_freeze(*mt_, joint);
  Rng stream = base_.split(trajectories_);
  ++trajectories_;
  return sample_trajectory(dyn[w], deviation, stream);
}

MtsagResult mtsag_simulate(const MultiTypeModel& mt, const std::vector<int>& populations,
                           const JointPolicy& joint, int deviating_type, const Policy& deviation,
                           int episodes, std::uint64_t seed) {
  if (episodes <= 0) throw ConfigError("mtsag_simulate: episodes must be positive");
  validate_joint_policy(mt, joint);
  const int W = mt.types();
  if (static_cast<int>(populations.size()) != W) throw ConfigError("one population size per type required");
  for (int n : populations) {
    if (n <= 0) throw ConfigError("population sizes must be positive");
  }
  if (deviating_type < 0 || deviating_type >= W) throw ConfigError("deviating type out of range");
  if (deviation.shape() != mt.shape(deviating_type)) throw ConfigError("deviation policy has the wrong shape");

  const int H = mt.horizon();
  int total = 0;
  std::vector<int> first_agent(W);
  for (int w = 0; w < W; ++w) {
    first_agent[w] = total;
    total += populations[w];
  }
  const int deviator = first_agent[deviating_type];

  // Runs one arm; returns the deviator's total reward. Random numbers depend only on
  // (episode, agent, step), so the arms are coupled.
  auto run_arm = [&](const Rng& episode_rng, bool deviate) {
    std::vector<int> state(total);
    std::vector<int> type(total);
    for (int w = 0; w < W; ++w) {
      for (int n = 0; n < populations[w]; ++n) {
        const int agent = first_agent[w] + n;
        type[agent] = w;
        Rng r = episode_rng.split(static_cast<std::uint64_t>(agent));
        state[agent] = inverse_cdf(mt.initial(w), r.uniform());
      }
    }
    double collected = 0.0;
    for (int h = 0; h < H; ++h) {
      JointDensity empirical(W);
      for (int w = 0; w < W; ++w) empirical[w] = Vector::Zero(mt.type_shape(w).states);
      for (int agent = 0; agent < total; ++agent) empirical[type[agent]](state[agent]) += 1.0;
      for (int w = 0; w < W; ++w) empirical[w] /= populations[w];
      std::vector<FrozenStep> steps;
      for (int w = 0; w < W; ++w) steps.push_back(mt.freeze(w, h, empirical));
      for (int agent = 0; agent < total; ++agent) {
        const int w = type[agent];
        Rng r = episode_rng.split(static_cast<std::uint64_t>(total) * (h + 1) + agent);
        const Policy& pi = (deviate && agent == deviator) ? deviation : joint[w];
        const int a = inverse_cdf(pi.step(h).row(state[agent]).transpose(), r.uniform());
        const int row = state[agent] * mt.type_shape(w).actions + a;
        if (agent == deviator) collected += steps[w].reward(row);
        state[agent] = inverse_cdf(steps[w].kernel.row(row), r.uniform());
      }
    }
    return collected;
  };

  Rng base(seed);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int e = 0; e < episodes; ++e) {
    const Rng episode_rng = base.split(static_cast<std::uint64_t>(e));
    const double gain = run_arm(episode_rng, true) - run_arm(episode_rng, false);
    sum += gain;
    sum_sq += gain * gain;
  }
  MtsagResult out;
  out.episodes = episodes;
  out.total_agents = total;
  out.mean_gain = sum / episodes;
  if (episodes > 1) {
    const double var = std::max(0.0, (sum_sq - episodes * out.mean_gain * out.mean_gain) / (episodes - 1));
    out.stderr_gain = std::sqrt(var / episodes);
  }
  return out;
}

// ---- serialisation ----

nlohmann::json multitype_to_json(const TabularMultiTypeModel& mt) {
  nlohmann::json types = nlohmann::json::array();
  for (int w = 0; w < mt.types(); ++w) {
    const auto& p = mt.params(w);
    nlohmann::json logits = nlohmann::json::array();
    nlohmann::json mixing = nlohmann::json::array();
    nlohmann::json base = nlohmann::json::array();
    nlohmann::json tilt = nlohmann::json::array();
    for (int h = 0; h < mt.horizon(); ++h) {
      logits.push_back(matrix_to_json(p.logits[h]));
      mixing.push_back(matrix_to_json(p.mixing[h]));
      base.push_back(vector_to_json(p.reward_base[h]));
      tilt.push_back(matrix_to_json(p.reward_tilt[h]));
    }
    types.push_back({{"S", mt.type_shape(w).states},
                     {"A", mt.type_shape(w).actions},
                     {"initial", vector_to_json(mt.initial(w))},
                     {"logits", logits},
                     {"mixing", mixing},
                     {"reward_base", base},
                     {"reward_tilt", tilt}});
  }
  const Shape lifted = lifted_shape(mt);
  return {{"schema_version", kClassSchemaVersion},
          {"H", mt.horizon()},
          {"S", lifted.states},
          {"A", lifted.actions},
          {"kind", "multitype"},
          {"W", mt.types()},
          {"sensitivity", mt.sensitivity()},
          {"types", types}};
}

std::shared_ptr<TabularMultiTypeModel> multitype_from_json(const nlohmann::json& j) {
  if (j.value("schema_version", 0) != kClassSchemaVersion || j.value("kind", "") != "multitype") {
    throw ConfigError("not a multi-type container");
  }
  std::vector<TypeShape> shapes;
  std::vector<Vector> initial;
  std::vector<TabularMultiTypeModel::TypeParams> params;
  for (const auto& t : j.at("types")) {
    shapes.push_back(TypeShape{t.at("S").get<int>(), t.at("A").get<int>()});
    initial.push_back(vector_from_json(t.at("initial")));
    TabularMultiTypeModel::TypeParams p;
    for (const auto& m : t.at("logits")) p.logits.push_back(matrix_from_json(m));
    for (const auto& m : t.at("mixing")) p.mixing.push_back(matrix_from_json(m));
    for (const auto& v : t.at("reward_base")) p.reward_base.push_back(vector_from_json(v));
    for (const auto& m : t.at("reward_tilt")) p.reward_tilt.push_back(matrix_from_json(m));
    params.push_back(std::move(p));
  }
  return std::make_shared<TabularMultiTypeModel>(j.at("H").get<int>(), std::move(shapes), std::move(initial),
                                                 j.at("sensitivity").get<double>(), std::move(params));
}

}  // namespace mfg
