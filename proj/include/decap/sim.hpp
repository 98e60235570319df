#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "decap/robot_model.hpp"

namespace decap {

// Full generalized state of a planar robot. Angle conventions:
//   - joint angles are positive swinging the link tip toward +x,
//   - base pitch is positive tipping the body toward +x (projected gravity
//     in the body frame is (sin pitch, -cos pitch)).
struct SimState {
  Eigen::VectorXd q;     // joint angles, rad
  Eigen::VectorXd qdot;  // joint velocities, rad/s
  Eigen::Vector2d base_pos = Eigen::Vector2d::Zero();  // world x, z of the base, m
  double base_pitch = 0.0;                             // rad
  Eigen::Vector2d base_vel = Eigen::Vector2d::Zero();  // world vx, vz, m/s
  double pitch_rate = 0.0;                             // rad/s
  long long time_step = 0;

  bool finite() const;
};

SimState default_state(const RobotModel& model);

// Ground interaction snapshot for one state. Forces are produced at foot
// tips only; every other body point below ground is flagged but exerts no
// force (falls are handled by episode termination).
struct ContactReport {
  Eigen::VectorXd normal_force;      // per foot, N, >= 0
  Eigen::VectorXd tangential_force;  // per foot, N
  Eigen::VectorXd penetration;       // per foot, m, >= 0
  std::vector<bool> in_contact;      // per foot
  Eigen::VectorXd foot_vel_x;        // per foot world horizontal velocity, m/s
  std::vector<bool> body_collision;  // [0] = base, then one per link; non-foot points only

  int n_collisions() const {
    int n = 0;
    for (bool b : body_collision) n += b ? 1 : 0;
    return n;
  }
};

struct FkResult {
  std::vector<Eigen::Vector2d> foot_world;  // per foot, world frame
  std::vector<Eigen::Vector2d> ee_body;     // per foot, body frame
};

FkResult forward_kinematics(const Eigen::VectorXd& q, const Eigen::Vector2d& base_pos,
                            double base_pitch, const RobotModel& model);

ContactReport contact_forces(const SimState& state, const RobotModel& model);

// One semi-implicit Euler step (velocities first, then positions).
// Torques are clamped to the model limits before integration and joint
// angles are hard-clamped to their limits with velocity zeroing.
// Deterministic: identical inputs give bit-identical outputs.
std::pair<SimState, ContactReport> step(const SimState& state, const Eigen::VectorXd& torques,
                                        const RobotModel& model, double dt);

// Total mechanical energy (kinetic + gravitational potential), used by the
// passive-dynamics tests and available for diagnostics.
double mechanical_energy(const SimState& state, const RobotModel& model);

}  // namespace decap
