#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>

#include "decap/robot_model.hpp"
#include "decap/sim.hpp"

namespace decap {

struct Gains {
  double kp = 20.0;
  double kd = 0.5;
};

// Exponential decay gamma^(t/k) applied to the PD assist torque.
struct DecaySchedule {
  double gamma = 0.99;
  double k = 100.0;
};

double decay_factor(const DecaySchedule& s, std::int64_t t);

// tau = Kp (q_des - q) - Kd qdot
Eigen::VectorXd pd_torque(const Eigen::VectorXd& q_des, const Eigen::VectorXd& q,
                          const Eigen::VectorXd& qdot, const Gains& gains);

enum class ActionMode { position, torque, decap, assisted };
enum class DecayClock { global, episode };

ActionMode action_mode_from_string(const std::string& s);
const char* to_string(ActionMode m);
DecayClock decay_clock_from_string(const std::string& s);
const char* to_string(DecayClock c);

struct ActionConfig {
  ActionMode mode = ActionMode::position;
  double action_scale_position = 0.25;  // rad per unit action, offset from q_nom
  double action_scale_torque = 8.0;     // N*m per unit action
  Gains gains;                          // PD tracking (position mode) and decap priors
  Gains assist_gains{5.0, 0.125};       // low-gain assistance, 0.25x the tracking gains
  DecaySchedule decay;
  DecayClock decay_clock = DecayClock::global;
};

struct ActionResult {
  Eigen::VectorXd torques;            // clamped to model torque limits
  Eigen::VectorXd torques_unclamped;  // pre-clamp, for torque penalties
  Eigen::VectorXd q_des;              // position/assist target actually used
};

// Maps a raw policy action to joint torques.
//  position: q_des = q_nom + scale * a, PD tracking
//  torque:   tau = scale * a
//  decap:    tau = scale * a + decay(t) * pd(q_ref, q, qdot)   [q_ref from imitation]
//  assisted: tau = scale * a + pd_low_gain(q_ref, q, qdot)     [q_ref from position policy]
// q_ref must point at the reference target for decap/assisted modes and may be
// null otherwise.
ActionResult apply_action(const Eigen::VectorXd& raw, const SimState& state,
                          const Eigen::VectorXd* q_ref, const ActionConfig& cfg,
                          const RobotModel& model, std::int64_t t);

}  // namespace decap
