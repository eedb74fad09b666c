#include "mfg/sampler.hpp"

namespace mfg {

namespace {
constexpr std::size_t kCacheLimit = 64;
}

Trajectory sample_trajectory(const FrozenDynamics& dyn, const Policy& eval, Rng& rng) {
  const Shape& shape = dyn.shape;
  if (eval.shape() != shape) throw ConfigError("sampler: policy shape does not match the model");
  Trajectory traj;
  traj.reserve(shape.horizon);
  int s = rng.categorical(dyn.initial);
  for (int h = 0; h < shape.horizon; ++h) {
    const int a = rng.categorical(eval.step(h).row(s).transpose());
    const int row = s * shape.actions + a;
    const FrozenStep& step = dyn.steps[h];
    const int next = rng.categorical(step.kernel.row(row));
    traj.push_back(Transition{h, s, a, step.reward(row), next});
    s = next;
  }
  return traj;
}

SamplerState::SamplerState(ModelPtr true_model, std::uint64_t seed)
    : model_(std::move(true_model)), seed_(seed), base_(seed) {
  if (!model_) throw ConfigError("sampler needs a model");
}

void SamplerState::set_log(std::ostream* out, int run_id) {
  log_ = out;
  run_id_ = run_id;
}

void SamplerState::write_log_header(std::ostream& out) {
  out << "run_id,query_id,h,s,a,r,s_next\n";
}

const FrozenDynamics& SamplerState::frozen_for(const Policy& ref) {
  if (!caching_) {
    scratch_ = freeze_along(*model_, ref);
    return scratch_;
  }
  const std::uint64_t hash = ref.content_hash();
  for (auto it = cache_.begin(); it != cache_.end(); ++it) {
    if (it->hash == hash && it->ref == ref) {
      cache_.splice(cache_.begin(), cache_, it);
      return cache_.front().dyn;
    }
  }
  cache_.push_front(CacheEntry{hash, ref, freeze_along(*model_, ref)});
  if (cache_.size() > kCacheLimit) cache_.pop_back();
  return cache_.front().dyn;
}

Trajectory SamplerState::query(const Policy& eval, const Policy& ref) {
  if (ref.shape() != model_->shape()) throw ConfigError("sampler: reference policy shape mismatch");
  const FrozenDynamics& dyn = frozen_for(ref);
  Rng stream = base_.split(queries_);
  Trajectory traj = sample_trajectory(dyn, eval, stream);
  if (log_) {
    for (const auto& t : traj) {
      *log_ << run_id_ << ',' << queries_ << ',' << t.h << ',' << t.s << ',' << t.a << ',' << t.r
            << ',' << t.s_next << '\n';
    }
  }
  ++queries_;
  ++trajectories_;
  return traj;
}

}  // namespace mfg
