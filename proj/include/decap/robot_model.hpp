#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace decap {

// One rigid link, attached to its parent by a single revolute joint.
// The link's local frame has its origin at the joint; the link body extends
// toward (0, -length) in that frame, so q = 0 hangs the link straight down
// when the parent frame is level. Positive q swings the tip toward +x.
struct LinkSpec {
  std::string name;
  double mass = 0.0;       // kg
  double length = 0.0;     // m
  double inertia = 0.0;    // kg m^2 about the COM
  double damping = 0.0;    // N m s/rad viscous damping at the joint
  double com_ratio = 0.5;  // COM location along the link axis, in [0, 1]
  int parent = -1;         // -1 = base, otherwise index of an earlier link
  Eigen::Vector2d attach = Eigen::Vector2d::Zero();  // joint origin in parent frame
};

struct ContactParams {
  double k_n = 4000.0;  // normal spring, N/m
  double c_n = 50.0;    // normal damper, N s/m
  double k_t = 300.0;   // tangential damper, N s/m
  double mu = 0.8;      // Coulomb friction coefficient
};

// Planar robot description loaded from a `.model` file. Immutable after
// load; see docs/file_formats.md for the on-disk schema.
struct RobotModel {
  int format_version = 1;
  std::string name;
  double gravity = 9.81;  // magnitude, m/s^2, acting toward -z

  double base_mass = 1.0;
  double base_inertia = 0.01;
  double base_half_length = 0.1;  // collision endpoints at +-x in base frame
  bool base_fixed = false;        // test rigs only; bundled robots float

  std::vector<LinkSpec> links;  // one entry per joint
  Eigen::VectorXd torque_limits;
  Eigen::VectorXd joint_lower;
  Eigen::VectorXd joint_upper;
  Eigen::VectorXd q_nom;
  ContactParams contact;
  std::vector<int> feet;  // link indices whose tip is a foot
  double h_nom = 0.5;     // nominal standing base height, m

  int n_joints() const { return static_cast<int>(links.size()); }
  int n_feet() const { return static_cast<int>(feet.size()); }

  // Throws ConfigError naming the offending field.
  void validate() const;
};

RobotModel load_model(const std::string& path);
void save_model(const RobotModel& model, const std::string& path);

// (De)serialization against an in-memory JSON text, used by load/save and
// the round-trip tests.
RobotModel model_from_json_text(const std::string& text, const std::string& origin);
std::string model_to_json_text(const RobotModel& model);

}  // namespace decap
