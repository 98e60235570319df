#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "decap/control.hpp"
#include "decap/imitation.hpp"
#include "decap/robot_model.hpp"
#include "decap/rng.hpp"
#include "decap/sim.hpp"
#include "decap/task.hpp"

namespace decap {

struct PolicyParameters;  // ppo.hpp

struct EnvConfig {
  CommandRanges commands;
  TerminationConfig termination;
  double dt = 0.005;
  double init_q_noise = 0.05;     // rad, uniform, applied on randomized resets
  double init_qdot_noise = 0.25;  // rad/s
};

struct EnvStepResult {
  double reward = 0.0;
  RewardBreakdown breakdown;
  bool done = false;
  TerminationReason reason = TerminationReason::none;
  bool fault = false;  // dynamics produced non-finite state
};

// Single-robot episode loop: maps raw policy actions to torques, advances the
// dynamics, scores rewards and checks termination. Does not auto-reset.
class Env {
 public:
  Env(const RobotModel* model, const EnvConfig& env_cfg, const ActionConfig& action_cfg,
      const RewardWeights& weights, bool use_imitation_rewards, std::uint64_t seed);

  // Reference data for decap mode and imitation rewards; must outlive the env.
  void set_dataset(const ImitationDataset* ds) { dataset_ = ds; }
  // Frozen position policy for assisted mode; must outlive the env.
  void set_assist_policy(const PolicyParameters* p) { assist_ = p; }

  void reset(bool randomize);
  void set_command(const Command& cmd);

  EnvStepResult step(const Eigen::VectorXd& raw_action, std::int64_t decay_t);

  const Eigen::VectorXd& observation() const { return obs_; }
  const SimState& state() const { return state_; }
  const Command& command() const { return cmd_; }
  const Eigen::VectorXd& prev_action() const { return a_prev_; }
  const Eigen::VectorXd& last_torques() const { return torques_; }
  const Eigen::VectorXd& last_q_des() const { return q_des_; }  // zero in torque mode
  int episode_step() const { return ep_step_; }
  const RobotModel& model() const { return *model_; }
  FkResult fk() const;

 private:
  void refresh_observation();

  const RobotModel* model_;
  EnvConfig env_cfg_;
  ActionConfig action_cfg_;
  RewardWeights weights_;
  bool use_imitation_rewards_;
  const ImitationDataset* dataset_ = nullptr;
  const PolicyParameters* assist_ = nullptr;

  Rng rng_;
  SimState state_;
  Command cmd_;
  Eigen::VectorXd a_prev_;
  Eigen::VectorXd torques_;
  Eigen::VectorXd q_des_;
  Eigen::VectorXd obs_;
  int ep_step_ = 0;
};

}  // namespace decap
