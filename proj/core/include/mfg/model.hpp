#pragma once

#include "mfg/kernel.hpp"
#include "mfg/policy.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mfg {

/// Declared Lipschitz constants of the transition (l1 -> l1) and reward maps in the density.
struct LipschitzConstants {
  double transition = 0.0;
  double reward = 0.0;
};

/// Finite-horizon mean-field MDP: transitions and rewards depend on the current state density.
///
/// Implementations must return transition vectors on the simplex and rewards in [0, 1/H].
/// freeze() evaluates a whole step at a fixed density; the default loops over
/// transition()/reward(), concrete models override it with a faster batch form.
class MeanFieldModel {
 public:
  MeanFieldModel(Shape shape, Vector initial, LipschitzConstants lipschitz);
  virtual ~MeanFieldModel() = default;

  const Shape& shape() const { return shape_; }
  const Vector& initial() const { return initial_; }
  const LipschitzConstants& lipschitz() const { return lipschitz_; }

  virtual Vector transition(int h, int s, int a, const Vector& mu) const = 0;
  virtual double reward(int h, int s, int a, const Vector& mu) const = 0;
  virtual FrozenStep freeze(int h, const Vector& mu) const;

  /// Short tag used by serialisation ("tabular", "linear", "hard", "lifted", ...).
  virtual std::string kind() const = 0;

 protected:
  Shape shape_;
  Vector initial_;
  LipschitzConstants lipschitz_;
};

using ModelPtr = std::shared_ptr<const MeanFieldModel>;

/// Ordered, nonempty collection of models sharing (H, S, A, mu_1), with an optional true member.
class ModelClass {
 public:
  ModelClass() = default;
  explicit ModelClass(std::vector<ModelPtr> models, std::optional<int> true_index = std::nullopt,
                      nlohmann::json provenance = nlohmann::json::object());

  int size() const { return static_cast<int>(models_.size()); }
  const MeanFieldModel& operator[](int i) const { return *models_[i]; }
  const ModelPtr& ptr(int i) const { return models_[i]; }
  const std::vector<ModelPtr>& models() const { return models_; }
  const Shape& shape() const { return models_.front()->shape(); }
  const Vector& initial() const { return models_.front()->initial(); }

  std::optional<int> true_index() const { return true_index_; }
  const MeanFieldModel& true_model() const;
  ModelClass with_true_index(int index) const;

  /// Generator metadata (kind, seed, spec); echoed into serialised headers.
  const nlohmann::json& provenance() const { return provenance_; }

  /// Largest declared constants across members.
  LipschitzConstants lipschitz() const;

 private:
  std::vector<ModelPtr> models_;
  std::optional<int> true_index_;
  nlohmann::json provenance_;
};

}  // namespace mfg
