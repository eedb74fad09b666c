#include "mfg/environments.hpp"
#include "mfg/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace mfg {

namespace {

RowMatrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double lo, double hi, Rng& rng) {
  RowMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
  }
  return m;
}

Vector uniform_vector(Eigen::Index n, double lo, double hi, Rng& rng) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.uniform(lo, hi);
  return v;
}

void softmax_rows(RowMatrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
}

void check_shape(const Shape& shape) {
  if (shape.horizon <= 0 || shape.states <= 0 || shape.actions <= 0) {
    throw ConfigError("dimensions must be positive, got " + to_string(shape));
  }
}

}  // namespace

// ---- tabular ----

TabularModel::TabularModel(Shape shape, Vector initial, double sensitivity,
                           std::vector<RowMatrix> logits, std::vector<RowMatrix> mixing,
                           std::shared_ptr<const TabularReward> reward)
    : MeanFieldModel(shape, std::move(initial), {}),
      sensitivity_(sensitivity),
      logits_(std::move(logits)),
      mixing_(std::move(mixing)),
      reward_(std::move(reward)) {
  if (static_cast<int>(logits_.size()) != shape.horizon ||
      static_cast<int>(mixing_.size()) != shape.horizon || !reward_ || reward_->shape != shape) {
    throw ConfigError("tabular model: parameter arrays do not match the shape");
  }
  double mix_max = 0.0;
  for (const auto& w : mixing_) mix_max = std::max(mix_max, w.cwiseAbs().maxCoeff());
  double tilt_max = 0.0;
  for (const auto& t : reward_->tilt) tilt_max = std::max(tilt_max, t.cwiseAbs().maxCoeff());
  // Softmax maps a logit shift of sup-norm x to an l1 change of at most 2x.
  lipschitz_.transition = 2.0 * std::abs(sensitivity_) * mix_max;
  lipschitz_.reward = std::abs(reward_->sensitivity) * tilt_max / shape.horizon;
}

Vector TabularModel::transition(int h, int s, int a, const Vector& mu) const {
  RowMatrix row = logits_[h].row(s * shape_.actions + a);
  row += sensitivity_ * (mixing_[h] * mu).transpose();
  softmax_rows(row);
  return row.transpose();
}

double TabularModel::reward(int h, int s, int a, const Vector& mu) const {
  const int r = s * shape_.actions + a;
  const double raw = reward_->base[h](r) + reward_->sensitivity * reward_->tilt[h].row(r).dot(mu);
  return std::clamp(raw, 0.0, 1.0) / shape_.horizon;
}

FrozenStep TabularModel::freeze(int h, const Vector& mu) const {
  RowMatrix p = logits_[h];
  p.rowwise() += sensitivity_ * (mixing_[h] * mu).transpose();
  softmax_rows(p);
  Vector raw = reward_->base[h] + reward_->sensitivity * (reward_->tilt[h] * mu);
  Vector r = raw.cwiseMax(0.0).cwiseMin(1.0) / shape_.horizon;
  return FrozenStep{StepKernel::dense(std::move(p)), std::move(r)};
}

ModelClass gen_tabular_class(const TabularSpec& spec) {
  const Shape shape{spec.horizon, spec.states, spec.actions};
  check_shape(shape);
  if (spec.models <= 0) throw ConfigError("tabular class needs at least one model");
  Rng rng(spec.seed);
  Rng reward_rng = rng.split(0);
  auto reward = std::make_shared<TabularReward>();
  reward->shape = shape;
  reward->sensitivity = spec.density_sensitivity;
  for (int h = 0; h < shape.horizon; ++h) {
    reward->base.push_back(uniform_vector(shape.rows(), 0.2, 0.8, reward_rng));
    reward->tilt.push_back(uniform_matrix(shape.rows(), shape.states, -0.2, 0.2, reward_rng));
  }
  Rng init_rng = rng.split(1);
  const Vector initial = init_rng.dirichlet(shape.states);
  std::vector<ModelPtr> models;
  for (int k = 0; k < spec.models; ++k) {
    Rng mrng = rng.split(100 + static_cast<std::uint64_t>(k));
    std::vector<RowMatrix> logits;
    std::vector<RowMatrix> mixing;
    for (int h = 0; h < shape.horizon; ++h) {
      logits.push_back(uniform_matrix(shape.rows(), shape.states, -spec.logit_scale,
                                      spec.logit_scale, mrng));
      mixing.push_back(uniform_matrix(shape.states, shape.states, -1.0, 1.0, mrng));
    }
    models.push_back(std::make_shared<TabularModel>(shape, initial, spec.density_sensitivity,
                                                    std::move(logits), std::move(mixing), reward));
  }
  nlohmann::json provenance = {{"kind", "tabular"},
                               {"seed", spec.seed},
                               {"spec",
                                {{"H", spec.horizon},
                                 {"S", spec.states},
                                 {"A", spec.actions},
                                 {"K", spec.models},
                                 {"density_sensitivity", spec.density_sensitivity},
                                 {"logit_scale", spec.logit_scale}}}};
  return ModelClass(std::move(models), 0, std::move(provenance));
}

ModelClass gen_tabular_class(int horizon, int states, int actions, int models,
                             double density_sensitivity, std::uint64_t seed) {
  TabularSpec spec;
  spec.horizon = horizon;
  spec.states = states;
  spec.actions = actions;
  spec.models = models;
  spec.density_sensitivity = density_sensitivity;
  spec.seed = seed;
  return gen_tabular_class(spec);
}

// ---- linear ----

LinearModel::LinearModel(std::shared_ptr<const LinearFeatures> features, std::vector<RowMatrix> psi,
                         LipschitzConstants lipschitz)
    : MeanFieldModel(features->shape, Vector::Constant(features->shape.states,
                                                       1.0 / features->shape.states),
                     lipschitz),
      features_(std::move(features)),
      psi_(std::move(psi)) {
  if (static_cast<int>(psi_.size()) != shape_.horizon) {
    throw ConfigError("linear model: one psi matrix per step required");
  }
  for (const auto& p : psi_) {
    if (p.rows() != features_->dim_psi || p.cols() != shape_.states) {
      throw ConfigError("linear model: psi must be d_psi x S");
    }
  }
}

RowMatrix LinearModel::g_matrix(int h, const Vector& mu) const {
  const Vector flat = features_->u[h].transpose() * mu;
  return Eigen::Map<const RowMatrix>(flat.data(), features_->dim_phi, features_->dim_psi);
}

Vector LinearModel::reward_vector(int h, const Vector& mu) const {
  const Vector coeff = features_->reward_mix[h] * mu;
  const Vector raw = features_->reward_base[h] + features_->phi[h] * coeff;
  return raw.cwiseMax(0.0).cwiseMin(1.0 / shape_.horizon);
}

Vector LinearModel::transition(int h, int s, int a, const Vector& mu) const {
  const RowMatrix g = g_matrix(h, mu);
  const Eigen::RowVectorXd left = features_->phi[h].row(s * shape_.actions + a) * g;
  Vector p = (left * psi_[h]).transpose().cwiseAbs();
  const double total = p.sum();
  if (!(total > 0.0)) return Vector::Constant(shape_.states, 1.0 / shape_.states);
  return p / total;
}

double LinearModel::reward(int h, int s, int a, const Vector& mu) const {
  const int r = s * shape_.actions + a;
  const Vector coeff = features_->reward_mix[h] * mu;
  const double raw = features_->reward_base[h](r) + features_->phi[h].row(r).dot(coeff);
  return std::clamp(raw, 0.0, 1.0 / shape_.horizon);
}

FrozenStep LinearModel::freeze(int h, const Vector& mu) const {
  const RowMatrix g = g_matrix(h, mu);
  RowMatrix left = features_->phi[h] * g;  // SA x d_psi
  const RowMatrix& psi = psi_[h];
  Vector reward = reward_vector(h, mu);
  if ((left.array() >= 0.0).all() && (psi.array() >= 0.0).all()) {
    // Nonnegative factors: |.| is the identity, so the kernel stays low rank.
    const Vector norms = left * psi.rowwise().sum();
    if ((norms.array() > 0.0).all()) {
      left = norms.cwiseInverse().asDiagonal() * left;
      return FrozenStep{StepKernel::factored(std::move(left), psi), std::move(reward)};
    }
  }
  RowMatrix p = (left * psi).cwiseAbs();
  std::uint64_t degenerate = 0;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    const double total = p.row(r).sum();
    if (total > 0.0) {
      p.row(r) /= total;
    } else {
      p.row(r).setConstant(1.0 / shape_.states);
      ++degenerate;
    }
  }
  degenerate_rows_ += degenerate;
  return FrozenStep{StepKernel::dense(std::move(p)), std::move(reward)};
}

ModelClass gen_linear_class(const LinearSpec& spec) {
  const Shape shape{spec.horizon, spec.states, spec.actions};
  check_shape(shape);
  if (spec.dim_phi <= 0 || spec.dim_psi <= 0 || spec.models <= 0) {
    throw ConfigError("linear class: feature dimensions and class size must be positive");
  }
  if (!(spec.beta_max >= 0.0 && spec.beta_max <= 1.0)) {
    throw ConfigError("linear class: beta_max must lie in [0, 1]");
  }
  Rng rng(spec.seed);
  Rng shared_rng = rng.split(0);
  auto features = std::make_shared<LinearFeatures>();
  features->shape = shape;
  features->dim_phi = spec.dim_phi;
  features->dim_psi = spec.dim_psi;
  const double h_inv = 1.0 / spec.horizon;
  // Density term of the reward is bounded by 0.2 / H in absolute value.
  const double mix_scale = 0.2 * h_inv / spec.dim_phi;
  double reward_lipschitz = 0.0;
  for (int h = 0; h < spec.horizon; ++h) {
    features->phi.push_back(uniform_matrix(shape.rows(), spec.dim_phi, 0.0, 1.0, shared_rng));
    features->u.push_back(
        uniform_matrix(shape.states, spec.dim_phi * spec.dim_psi, 0.0, 1.0, shared_rng));
    features->reward_base.push_back(
        uniform_vector(shape.rows(), 0.25 * h_inv, 0.75 * h_inv, shared_rng));
    features->reward_mix.push_back(
        uniform_matrix(spec.dim_phi, shape.states, -mix_scale, mix_scale, shared_rng));
    // |r(mu) - r(mu')| <= max_{s,a,s'} |(Phi R)(s,a,s')| * ||mu - mu'||_1.
    reward_lipschitz = std::max(
        reward_lipschitz, (features->phi.back() * features->reward_mix.back()).cwiseAbs().maxCoeff());
  }

  Rng psi_rng = rng.split(1);
  std::vector<std::vector<RowMatrix>> psis(spec.models);
  for (int k = 0; k < spec.models; ++k) {
    Rng mrng = psi_rng.split(static_cast<std::uint64_t>(k));
    const double beta = k == 0 ? 0.0 : mrng.uniform(0.0, spec.beta_max);
    for (int h = 0; h < spec.horizon; ++h) {
      RowMatrix fresh = uniform_matrix(spec.dim_psi, shape.states, 0.0, 1.0, mrng);
      if (k > 0) fresh = (1.0 - beta) * fresh + beta * psis[0][h];
      psis[k].push_back(std::move(fresh));
    }
  }

  // No closed form for the transition constant; the probed value on the first member is declared.
  const double transition_lipschitz =
      lipschitz_probe(LinearModel(features, psis[0], {}), 256, spec.seed).transition_ratio;
  std::vector<ModelPtr> models;
  models.reserve(spec.models);
  for (int k = 0; k < spec.models; ++k) {
    models.push_back(std::make_shared<LinearModel>(
        features, std::move(psis[k]), LipschitzConstants{transition_lipschitz, reward_lipschitz}));
  }
  Rng pick = rng.split(2);
  const int true_index = pick.index(spec.models);
  nlohmann::json provenance = {{"kind", "linear"},
                               {"seed", spec.seed},
                               {"spec",
                                {{"H", spec.horizon},
                                 {"S", spec.states},
                                 {"A", spec.actions},
                                 {"d_phi", spec.dim_phi},
                                 {"d_psi", spec.dim_psi},
                                 {"K", spec.models},
                                 {"beta_max", spec.beta_max}}}};
  return ModelClass(std::move(models), true_index, std::move(provenance));
}

// ---- hard instance ----

HardInstanceModel::HardInstanceModel(int d, double eps, double lipschitz_t, Vector center)
    : MeanFieldModel(Shape{3, d, d}, Vector::Unit(d, 0), LipschitzConstants{lipschitz_t, 0.0}),
      d_(d),
      eps_(eps),
      lt_(lipschitz_t),
      center_(std::move(center)) {
  if (d < 2) throw ConfigError("hard instance needs d >= 2");
  if (!(eps > 0.0) || eps > 0.25) throw ConfigError("hard instance eps must lie in (0, 1/4]");
  if (eps > lipschitz_t / (d + 1)) throw ConfigError("hard instance requires eps <= L_T / (d + 1)");
  if (center_.size() != 0 && center_.size() != d) throw ConfigError("hard instance center has wrong length");
  if (is_flat()) lipschitz_.transition = 0.0;
}

double HardInstanceModel::bump_probability(const Vector& mu2) const {
  if (is_flat()) return 0.5;
  const double bracket = std::max(0.0, 1.0 - lt_ / (4.0 * eps_) * (mu2 - center_).lpNorm<1>());
  return 0.5 + 2.0 * eps_ * bracket;
}

Vector HardInstanceModel::transition(int h, int s, int a, const Vector& mu) const {
  (void)s;
  Vector p = Vector::Zero(d_);
  if (h == 0) {
    p(a) = 1.0;
  } else if (h == 1) {
    p(0) = bump_probability(mu);
    p(1) = 1.0 - p(0);
  } else {
    p(s) = 1.0;
  }
  return p;
}

double HardInstanceModel::reward(int h, int s, int a, const Vector& mu) const {
  (void)a;
  (void)mu;
  return (h == 2 && s == 0) ? 1.0 / 3.0 : 0.0;
}

FrozenStep HardInstanceModel::freeze(int h, const Vector& mu) const {
  RowMatrix p = RowMatrix::Zero(d_ * d_, d_);
  Vector r = Vector::Zero(d_ * d_);
  const double bump = h == 1 ? bump_probability(mu) : 0.0;
  for (int s = 0; s < d_; ++s) {
    for (int a = 0; a < d_; ++a) {
      const int row = s * d_ + a;
      if (h == 0) {
        p(row, a) = 1.0;
      } else if (h == 1) {
        p(row, 0) = bump;
        p(row, 1) = 1.0 - bump;
      } else {
        p(row, s) = 1.0;
        if (s == 0) r(row) = 1.0 / 3.0;
      }
    }
  }
  return FrozenStep{StepKernel::dense(std::move(p)), std::move(r)};
}

std::vector<Vector> density_grid(int d, int zeta) {
  if (d <= 0 || zeta <= 0) throw ConfigError("density grid needs positive d and zeta");
  std::vector<Vector> out;
  std::vector<int> counts(d, 0);
  // Enumerate compositions of zeta into d parts in lexicographic order of counts.
  auto recurse = [&](auto&& self, int pos, int remaining) -> void {
    if (pos == d - 1) {
      counts[pos] = remaining;
      Vector v(d);
      for (int i = 0; i < d; ++i) v(i) = static_cast<double>(counts[i]) / zeta;
      out.push_back(std::move(v));
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      counts[pos] = c;
      self(self, pos + 1, remaining - c);
    }
  };
  recurse(recurse, 0, zeta);
  return out;
}

int resolved_zeta(const HardInstanceSpec& spec) {
  if (spec.zeta > 0) return spec.zeta;
  // A tiny slack keeps ratios such as 1 / (5 * 0.04) from flooring to 4.
  return static_cast<int>(std::floor(spec.lipschitz_t / (5.0 * spec.eps) + 1e-9));
}

ModelClass gen_hard_instance(const HardInstanceSpec& spec) {
  const int zeta = resolved_zeta(spec);
  if (zeta <= 0) throw ConfigError("hard instance: grid resolution must be positive");
  if (spec.models <= 0) throw ConfigError("hard instance: class size must be positive");
  const auto grid = density_grid(spec.d, zeta);
  if (spec.models > static_cast<int>(grid.size())) {
    throw ConfigError("hard instance: N = " + std::to_string(spec.models) +
                      " exceeds the grid size " + std::to_string(grid.size()));
  }
  std::vector<ModelPtr> models;
  for (int n = 0; n < spec.models; ++n) {
    models.push_back(std::make_shared<HardInstanceModel>(spec.d, spec.eps, spec.lipschitz_t, grid[n]));
  }
  models.push_back(std::make_shared<HardInstanceModel>(spec.d, spec.eps, spec.lipschitz_t, Vector()));
  nlohmann::json provenance = {{"kind", "hard"},
                               {"seed", 0},
                               {"spec",
                                {{"d", spec.d},
                                 {"eps", spec.eps},
                                 {"L_T", spec.lipschitz_t},
                                 {"zeta", zeta},
                                 {"N", spec.models}}}};
  return ModelClass(std::move(models), 0, std::move(provenance));
}

// ---- probe ----

LipschitzProbe lipschitz_probe(const MeanFieldModel& model, int pairs, std::uint64_t seed) {
  const Shape& shape = model.shape();
  Rng rng(seed);
  LipschitzProbe out;
  for (int i = 0; i < pairs; ++i) {
    const Vector mu = rng.dirichlet(shape.states);
    const Vector nu = rng.dirichlet(shape.states);
    const int h = rng.index(shape.horizon);
    const int s = rng.index(shape.states);
    const int a = rng.index(shape.actions);
    const double dmu = (mu - nu).lpNorm<1>();
    if (!(dmu > 0.0)) continue;
    const double dp = (model.transition(h, s, a, mu) - model.transition(h, s, a, nu)).lpNorm<1>();
    const double dr = std::abs(model.reward(h, s, a, mu) - model.reward(h, s, a, nu));
    out.transition_ratio = std::max(out.transition_ratio, dp / dmu);
    out.reward_ratio = std::max(out.reward_ratio, dr / dmu);
  }
  return out;
}

}  // namespace mfg
