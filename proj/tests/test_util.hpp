#pragma once

#include <Eigen/Core>

#include "decap/robot_model.hpp"

namespace decap::testutil {

// Point-mass pendulum: one link, all mass at the tip, frictionless pivot on
// a fixed base. Small-angle frequency is sqrt(g / length).
inline RobotModel pendulum(double mass = 1.0, double length = 0.5, double damping = 0.0) {
  RobotModel m;
  m.name = "pendulum";
  m.base_mass = 1.0;
  m.base_inertia = 0.01;
  m.base_half_length = 0.05;
  m.base_fixed = true;
  LinkSpec l;
  l.name = "rod";
  l.mass = mass;
  l.length = length;
  l.inertia = 0.0;  // point mass at the tip
  l.damping = damping;
  l.com_ratio = 1.0;
  l.parent = -1;
  m.links = {l};
  m.torque_limits = Eigen::VectorXd::Constant(1, 100.0);
  m.joint_lower = Eigen::VectorXd::Constant(1, -6.0);
  m.joint_upper = Eigen::VectorXd::Constant(1, 6.0);
  m.q_nom = Eigen::VectorXd::Zero(1);
  m.feet = {0};
  m.h_nom = 2.0;  // pivot far above ground; the tip never touches
  return m;
}

// Two-link arm on a fixed base, distributed masses, used by the FK and
// energy tests.
inline RobotModel two_link(bool base_fixed = true) {
  RobotModel m;
  m.name = "two_link";
  m.base_mass = 1.0;
  m.base_inertia = 0.02;
  m.base_half_length = 0.05;
  m.base_fixed = base_fixed;
  LinkSpec a;
  a.name = "upper";
  a.mass = 0.4;
  a.length = 0.3;
  a.inertia = 0.003;
  a.damping = 0.0;
  a.com_ratio = 0.5;
  a.parent = -1;
  LinkSpec b;
  b.name = "lower";
  b.mass = 0.25;
  b.length = 0.25;
  b.inertia = 0.0015;
  b.damping = 0.0;
  b.com_ratio = 0.5;
  b.parent = 0;
  b.attach = Eigen::Vector2d(0.0, -0.3);
  m.links = {a, b};
  m.torque_limits = Eigen::VectorXd::Constant(2, 100.0);
  m.joint_lower = Eigen::VectorXd::Constant(2, -6.0);
  m.joint_upper = Eigen::VectorXd::Constant(2, 6.0);
  m.q_nom = Eigen::VectorXd::Zero(2);
  m.feet = {1};
  m.h_nom = 3.0;
  return m;
}

}  // namespace decap::testutil
