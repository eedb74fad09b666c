#include "mfg/model.hpp"

#include <cmath>

namespace mfg {

MeanFieldModel::MeanFieldModel(Shape shape, Vector initial, LipschitzConstants lipschitz)
    : shape_(shape), initial_(std::move(initial)), lipschitz_(lipschitz) {
  if (shape_.horizon <= 0 || shape_.states <= 0 || shape_.actions <= 0) {
    throw ConfigError("model shape must be positive, got " + to_string(shape_));
  }
  if (initial_.size() != shape_.states) throw ConfigError("initial distribution has wrong length");
  if ((initial_.array() < 0.0).any() || std::abs(initial_.sum() - 1.0) > 1e-9) {
    throw ConfigError("initial distribution must lie on the simplex");
  }
}

FrozenStep MeanFieldModel::freeze(int h, const Vector& mu) const {
  const int S = shape_.states;
  const int A = shape_.actions;
  RowMatrix p(S * A, S);
  Vector r(S * A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      p.row(s * A + a) = transition(h, s, a, mu).transpose();
      r(s * A + a) = reward(h, s, a, mu);
    }
  }
  return FrozenStep{StepKernel::dense(std::move(p)), std::move(r)};
}

ModelClass::ModelClass(std::vector<ModelPtr> models, std::optional<int> true_index,
                       nlohmann::json provenance)
    : models_(std::move(models)), true_index_(true_index), provenance_(std::move(provenance)) {
  if (models_.empty()) throw ConfigError("model class must be nonempty");
  const Shape& shape = models_.front()->shape();
  const Vector& mu1 = models_.front()->initial();
  for (const auto& m : models_) {
    if (!m) throw ConfigError("model class contains a null model");
    if (m->shape() != shape) throw ConfigError("model class members must share (H, S, A)");
    if ((m->initial() - mu1).cwiseAbs().maxCoeff() > 1e-12) {
      throw ConfigError("model class members must share the initial distribution");
    }
  }
  if (true_index_ && (*true_index_ < 0 || *true_index_ >= size())) {
    throw ConfigError("true model index out of range");
  }
}

const MeanFieldModel& ModelClass::true_model() const {
  if (!true_index_) throw ConfigError("model class has no designated true model");
  return *models_[*true_index_];
}

ModelClass ModelClass::with_true_index(int index) const {
  return ModelClass(models_, index, provenance_);
}

LipschitzConstants ModelClass::lipschitz() const {
  LipschitzConstants out;
  for (const auto& m : models_) {
    out.transition = std::max(out.transition, m->lipschitz().transition);
    out.reward = std::max(out.reward, m->lipschitz().reward);
  }
  return out;
}

}  // namespace mfg
