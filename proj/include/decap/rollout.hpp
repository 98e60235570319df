#pragma once

#include <cstdint>
#include <vector>

#include "decap/env.hpp"
#include "decap/ppo.hpp"

namespace decap {

struct RolloutStats {
  double mean_reward = 0.0;  // per step, equals term_means.total() exactly
  RewardBreakdown term_means;
  double mean_ep_return = 0.0;  // completed episodes only; 0 when none finished
  double mean_ep_length = 0.0;
  int episodes = 0;
  int faults = 0;
};

struct RolloutResult {
  RolloutBatch batch;  // advantages already normalized
  RolloutStats stats;
};

// Synchronized on-policy collection across envs. global_step is the shared
// decay clock, incremented once per synchronized step; episodes that hit the
// time limit are bootstrapped with the critic value of their final state.
RolloutResult collect_rollouts(std::vector<Env>& envs, const PolicyParameters& policy, int steps,
                               double gamma, double lam, DecayClock clock,
                               std::int64_t& global_step, Rng& rng);

}  // namespace decap
