#include "mfg/pam.hpp"

#include <algorithm>

namespace mfg {

MfgPam::MfgPam(ModelPtr model, std::size_t cache_limit)
    : model_(std::move(model)), limit_(cache_limit) {
  if (!model_) throw ConfigError("MfgPam needs a model");
}

std::size_t MfgPam::cache_size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return cache_.size();
}

FrozenDynamics MfgPam::freeze(const Policy& ref) const {
  if (limit_ == 0) return freeze_along(*model_, ref);
  const std::uint64_t hash = ref.content_hash();
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto [lo, hi] = cache_.equal_range(hash);
    for (auto it = lo; it != hi; ++it) {
      if (it->second.ref == ref) {
        auto pos = std::find(order_.begin(), order_.end(), hash);
        if (pos != order_.end()) order_.splice(order_.begin(), order_, pos);
        return *it->second.dyn;
      }
    }
  }
  auto dyn = std::make_shared<const FrozenDynamics>(freeze_along(*model_, ref));
  std::lock_guard<std::mutex> lock(mutex_);
  cache_.emplace(hash, Entry{ref, dyn});
  order_.push_front(hash);
  while (cache_.size() > limit_ && !order_.empty()) {
    const std::uint64_t victim = order_.back();
    order_.pop_back();
    auto it = cache_.find(victim);
    if (it != cache_.end()) cache_.erase(it);
  }
  return *dyn;
}

std::shared_ptr<const MfgPam> to_pam(ModelPtr model) {
  return std::make_shared<const MfgPam>(std::move(model));
}

double conditional_return(const PolicyAwareModel& pam, const Policy& eval, const Policy& ref) {
  return evaluate(pam.freeze(ref), eval);
}

BestResponse best_response(const PolicyAwareModel& pam, const Policy& ref) {
  return optimize(pam.freeze(ref));
}

double ne_gap(const PolicyAwareModel& pam, const Policy& policy) {
  return ne_gap(pam.freeze(policy), policy);
}

}  // namespace mfg
