#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "decap/rng.hpp"
#include "decap/sim.hpp"

namespace decap {

struct ImitationFrame;  // imitation.hpp

struct Command {
  double v_cmd = 0.0;  // forward velocity command, m/s
  double w_cmd = 0.0;  // pitch-rate command, rad/s
};

struct CommandRanges {
  double v_lo = 0.3, v_hi = 1.0;
  double w_lo = 0.0, w_hi = 0.0;
};

// Observation layout is identical for position and torque policies:
// [g_proj (2), v_cmd, w_cmd, q (n), qdot (n), a_prev (n)].
struct Observation {
  Eigen::Vector2d g_proj;  // gravity direction in the body frame, unit norm
  double v_cmd = 0.0;
  double w_cmd = 0.0;
  Eigen::VectorXd q;
  Eigen::VectorXd qdot;
  Eigen::VectorXd a_prev;  // previous unscaled action

  Eigen::VectorXd flatten() const;
  static int size(int n_joints) { return 4 + 3 * n_joints; }
};

Observation observe(const SimState& state, const Command& cmd, const Eigen::VectorXd& a_prev);

// Reward coefficients. The task weights are the per-step coefficients that
// multiply dt (except ang_vel_penalty, which is applied without dt); the
// squared-exponential terms use phi(x) = exp(-|x|^2 / sigma).
struct RewardWeights {
  double dt = 0.005;

  // task shaping terms
  double lin_vel = 1.0;
  double ang_vel = 1.0;
  double collisions = 1.0;
  double action_rate = 0.01;
  double orientation = 5.0;
  double ang_vel_penalty = 0.05;  // multiplies omega^2 directly, no dt
  double lin_vel_penalty = 2.0;
  double joint_torques = 1e-5;
  double joint_motion = 2.5e-7;
  double feet_slip = 0.04;
  double sigma_tracking = 0.25;

  // imitation terms
  double im_joint_angles = 1.5;
  double im_ee_position = 1.5;
  double im_foot_height = 1.5;
  double im_base_height = 10.0;
  double sigma_joint_angles = 0.1;
  double sigma_ee_position = 0.1;
  double sigma_foot_height = 0.025;
  double imitation_scale = 1.0;  // multiplies every imitation term
};

// Per-term reward decomposition; total() is the exact sum of all terms.
struct RewardBreakdown {
  double lin_vel = 0.0;
  double ang_vel = 0.0;
  double collisions = 0.0;
  double action_rate = 0.0;
  double orientation = 0.0;
  double ang_vel_penalty = 0.0;
  double lin_vel_penalty = 0.0;
  double joint_torques = 0.0;
  double joint_motion = 0.0;
  double feet_slip = 0.0;
  double im_joint_angles = 0.0;
  double im_ee_position = 0.0;
  double im_foot_height = 0.0;
  double im_base_height = 0.0;

  double total() const;
  std::vector<double> values() const;
  static const std::vector<std::string>& names();
  RewardBreakdown& operator+=(const RewardBreakdown& other);
  RewardBreakdown& operator*=(double s);
};

RewardBreakdown shaping_reward(const SimState& prev, const SimState& curr,
                               const Eigen::VectorXd& torques, const ContactReport& contact,
                               const Command& cmd, const Eigen::VectorXd& a_prev,
                               const Eigen::VectorXd& a_curr, const RewardWeights& w);

RewardBreakdown imitation_reward(const SimState& curr, const ImitationFrame& ref,
                                 const FkResult& fk, const RewardWeights& w);

Command sample_command(Rng& rng, const CommandRanges& ranges);

enum class TerminationReason { none, base_contact, orientation, timeout };
const char* to_string(TerminationReason r);

struct TerminationConfig {
  double pitch_limit = 1.0;  // rad
  int max_steps = 1000;
};

std::pair<bool, TerminationReason> terminate(const SimState& state, const ContactReport& contact,
                                             int episode_step, const TerminationConfig& cfg);

}  // namespace decap
