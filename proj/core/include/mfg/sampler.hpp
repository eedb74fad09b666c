#pragma once

#include "mfg/dynamics.hpp"
#include "mfg/model.hpp"
#include "mfg/rng.hpp"

#include <cstdint>
#include <list>
#include <ostream>
#include <vector>

namespace mfg {

struct Transition {
  int h = 0;
  int s = 0;
  int a = 0;
  double r = 0.0;
  int s_next = 0;
};

using Trajectory = std::vector<Transition>;

/// Draws one episode from fixed dynamics. Exposed for samplers over other model kinds.
Trajectory sample_trajectory(const FrozenDynamics& dyn, const Policy& eval, Rng& rng);

/// Trajectory oracle on the true model: the deviating policy acts while every
/// transition and reward is frozen at the reference policy's mean-field flow.
class SamplerState {
 public:
  SamplerState(ModelPtr true_model, std::uint64_t seed);

  Trajectory query(const Policy& eval, const Policy& ref);

  std::uint64_t queries() const { return queries_; }
  std::uint64_t trajectories() const { return trajectories_; }
  std::uint64_t seed() const { return seed_; }
  const MeanFieldModel& model() const { return *model_; }

  /// Turning the flow cache off recomputes the reference flow on every query.
  void set_caching(bool enabled) { caching_ = enabled; }
  /// Every returned transition is appended as CSV (run_id,query_id,h,s,a,r,s_next).
  void set_log(std::ostream* out, int run_id);
  static void write_log_header(std::ostream& out);

 private:
  const FrozenDynamics& frozen_for(const Policy& ref);

  struct CacheEntry {
    std::uint64_t hash;
    Policy ref;
    FrozenDynamics dyn;
  };

  ModelPtr model_;
  std::uint64_t seed_;
  Rng base_;
  std::uint64_t queries_ = 0;
  std::uint64_t trajectories_ = 0;
  bool caching_ = true;
  std::list<CacheEntry> cache_;  // most recent first
  FrozenDynamics scratch_;
  std::ostream* log_ = nullptr;
  int run_id_ = 0;
};

}  // namespace mfg
