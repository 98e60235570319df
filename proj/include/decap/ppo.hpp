#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "decap/mlp.hpp"
#include "decap/rng.hpp"

namespace decap {

// Diagonal-Gaussian actor-critic. obs_shift/obs_scale normalize raw
// observations before the nets, so checkpoints are self-contained.
struct PolicyParameters {
  Mlp actor;
  Mlp critic;
  Eigen::VectorXd log_std;  // state-independent, learned
  Eigen::VectorXd obs_shift;
  Eigen::VectorXd obs_scale;

  int obs_size() const { return actor.input_size(); }
  int act_size() const { return actor.output_size(); }
};

PolicyParameters make_policy(int obs_size, int act_size, const std::vector<int>& hidden,
                             double init_log_std, const Eigen::VectorXd& obs_shift,
                             const Eigen::VectorXd& obs_scale, Rng& rng);

Eigen::MatrixXd normalize_obs(const PolicyParameters& p, const Eigen::MatrixXd& obs);

// Deterministic action (the Gaussian mean).
Eigen::VectorXd act_mean(const PolicyParameters& p, const Eigen::VectorXd& obs);
Eigen::MatrixXd act_mean(const PolicyParameters& p, const Eigen::MatrixXd& obs);

struct SampledAction {
  Eigen::VectorXd action;
  double log_prob = 0.0;
};
SampledAction act_sample(const PolicyParameters& p, const Eigen::VectorXd& obs, Rng& rng);

double state_value(const PolicyParameters& p, const Eigen::VectorXd& obs);
Eigen::VectorXd state_value(const PolicyParameters& p, const Eigen::MatrixXd& obs);

double gaussian_log_prob(const Eigen::VectorXd& action, const Eigen::VectorXd& mean,
                         const Eigen::VectorXd& log_std);

// Generalized advantage estimation over one contiguous trajectory segment.
// dones[t] marks the step that ended an episode (no bootstrap across it);
// last_value bootstraps the final step if the segment was truncated.
struct GaeResult {
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;  // advantages + values
};
GaeResult gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
              const std::vector<bool>& dones, double last_value, double gamma, double lam);

struct PpoConfig {
  double gamma = 0.99;
  double lam = 0.95;
  double clip_ratio = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.005;
  double max_grad_norm = 1.0;
  int epochs = 4;
  int minibatches = 4;
  AdamConfig adam;
};

// Flattened on-policy batch; observations are raw (normalization happens
// inside the policy), advantages are already normalized by the collector.
struct RolloutBatch {
  Eigen::MatrixXd obs;      // (obs_size x N)
  Eigen::MatrixXd actions;  // (act_size x N)
  Eigen::VectorXd log_probs;
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;

  std::int64_t size() const { return obs.cols(); }
};

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double grad_norm = 0.0;  // pre-clip, last minibatch
  bool aborted = false;    // non-finite loss; parameters left untouched
};

struct PpoOptimizer {
  AdamState actor_state;  // log_std shares this state
  AdamState critic_state;

  void init(const PolicyParameters& p);
};

UpdateStats ppo_update(PolicyParameters& p, PpoOptimizer& opt, const RolloutBatch& batch,
                       const PpoConfig& cfg, Rng& rng);

}  // namespace decap
