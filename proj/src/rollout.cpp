#include "decap/rollout.hpp"

#include <cmath>
#include <stdexcept>

namespace decap {

RolloutResult collect_rollouts(std::vector<Env>& envs, const PolicyParameters& policy, int steps,
                               double gamma, double lam, DecayClock clock,
                               std::int64_t& global_step, Rng& rng) {
  const int n_envs = static_cast<int>(envs.size());
  if (n_envs == 0 || steps <= 0) throw std::invalid_argument("collect_rollouts: empty plan");
  const int obs_dim = policy.obs_size();
  const int act_dim = policy.act_size();
  const Eigen::Index total = static_cast<Eigen::Index>(n_envs) * steps;

  RolloutResult out;
  RolloutBatch& batch = out.batch;
  batch.obs.resize(obs_dim, total);
  batch.actions.resize(act_dim, total);
  batch.log_probs.resize(total);
  batch.advantages.resize(total);
  batch.returns.resize(total);

  // env-major layout: env e owns columns [e*steps, (e+1)*steps)
  Eigen::VectorXd rewards_aug = Eigen::VectorXd::Zero(total);  // with timeout bootstrap
  std::vector<bool> dones(static_cast<std::size_t>(total), false);

  RolloutStats& stats = out.stats;
  std::vector<double> ep_return(static_cast<std::size_t>(n_envs), 0.0);
  std::vector<int> ep_len(static_cast<std::size_t>(n_envs), 0);
  double ep_return_sum = 0.0;
  std::int64_t ep_len_sum = 0;

  Eigen::MatrixXd obs_now(obs_dim, n_envs);
  const Eigen::ArrayXd stddev = policy.log_std.array().exp();

  for (int t = 0; t < steps; ++t) {
    for (int e = 0; e < n_envs; ++e) obs_now.col(e) = envs[static_cast<std::size_t>(e)].observation();
    const Eigen::MatrixXd mean = act_mean(policy, obs_now);

    for (int e = 0; e < n_envs; ++e) {
      Env& env = envs[static_cast<std::size_t>(e)];
      const Eigen::Index col = static_cast<Eigen::Index>(e) * steps + t;

      Eigen::VectorXd action = mean.col(e);
      for (int i = 0; i < act_dim; ++i) action[i] += stddev[i] * rng.normal();
      batch.obs.col(col) = obs_now.col(e);
      batch.actions.col(col) = action;
      batch.log_probs[col] = gaussian_log_prob(action, mean.col(e), policy.log_std);

      const std::int64_t decay_t =
          clock == DecayClock::global ? global_step : env.episode_step();
      const EnvStepResult res = env.step(action, decay_t);

      stats.term_means += res.breakdown;
      rewards_aug[col] = res.reward;
      ep_return[static_cast<std::size_t>(e)] += res.reward;
      ep_len[static_cast<std::size_t>(e)] += 1;

      if (res.fault) stats.faults += 1;
      if (res.done) {
        // Time limits are not true terminations: bootstrap with the value of
        // the state the episode was cut at.
        if (res.reason == TerminationReason::timeout && !res.fault)
          rewards_aug[col] += gamma * state_value(policy, env.observation());
        dones[static_cast<std::size_t>(col)] = true;
        stats.episodes += 1;
        ep_return_sum += ep_return[static_cast<std::size_t>(e)];
        ep_len_sum += ep_len[static_cast<std::size_t>(e)];
        ep_return[static_cast<std::size_t>(e)] = 0.0;
        ep_len[static_cast<std::size_t>(e)] = 0;
        env.reset(true);
      }
    }
    global_step += 1;
  }

  // One batched critic pass over everything collected, then per-env GAE.
  const Eigen::VectorXd values = state_value(policy, batch.obs);
  for (int e = 0; e < n_envs; ++e) {
    const Eigen::Index lo = static_cast<Eigen::Index>(e) * steps;
    const Eigen::VectorXd seg_rewards = rewards_aug.segment(lo, steps);
    const Eigen::VectorXd seg_values = values.segment(lo, steps);
    std::vector<bool> seg_dones(dones.begin() + lo, dones.begin() + lo + steps);
    const double last_value =
        seg_dones.back() ? 0.0
                         : state_value(policy, envs[static_cast<std::size_t>(e)].observation());
    const GaeResult g = gae(seg_rewards, seg_values, seg_dones, last_value, gamma, lam);
    batch.advantages.segment(lo, steps) = g.advantages;
    batch.returns.segment(lo, steps) = g.returns;
  }

  const double adv_mean = batch.advantages.mean();
  const double adv_std = std::sqrt(
      (batch.advantages.array() - adv_mean).square().sum() / static_cast<double>(total));
  batch.advantages = (batch.advantages.array() - adv_mean) / (adv_std + 1e-8);

  stats.term_means *= 1.0 / static_cast<double>(total);
  stats.mean_reward = stats.term_means.total();
  if (stats.episodes > 0) {
    stats.mean_ep_return = ep_return_sum / stats.episodes;
    stats.mean_ep_length = static_cast<double>(ep_len_sum) / stats.episodes;
  }
  return out;
}

}  // namespace decap
