#pragma once

#include "mfg/dynamics.hpp"
#include "mfg/model.hpp"

#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <unordered_map>

namespace mfg {

/// A model whose kernel and reward take a reference policy instead of a density.
///
/// freeze(ref) returns the MDP with every (h, s, a) kernel and reward evaluated at ref.
class PolicyAwareModel {
 public:
  virtual ~PolicyAwareModel() = default;
  virtual const Shape& shape() const = 0;
  virtual const Vector& initial() const = 0;
  virtual FrozenDynamics freeze(const Policy& ref) const = 0;
};

/// PAM view of a mean-field model: kernels frozen at the reference policy's own flow.
class MfgPam final : public PolicyAwareModel {
 public:
  explicit MfgPam(ModelPtr model, std::size_t cache_limit = 10000);

  const Shape& shape() const override { return model_->shape(); }
  const Vector& initial() const override { return model_->initial(); }
  FrozenDynamics freeze(const Policy& ref) const override;
  const MeanFieldModel& model() const { return *model_; }
  std::size_t cache_size() const;

 private:
  struct Entry {
    Policy ref;
    std::shared_ptr<const FrozenDynamics> dyn;
  };
  ModelPtr model_;
  std::size_t limit_;
  mutable std::mutex mutex_;
  mutable std::list<std::uint64_t> order_;  // most recent first
  mutable std::unordered_multimap<std::uint64_t, Entry> cache_;
};

std::shared_ptr<const MfgPam> to_pam(ModelPtr model);

double conditional_return(const PolicyAwareModel& pam, const Policy& eval, const Policy& ref);
BestResponse best_response(const PolicyAwareModel& pam, const Policy& ref);
double ne_gap(const PolicyAwareModel& pam, const Policy& policy);

}  // namespace mfg
