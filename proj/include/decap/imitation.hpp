#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "decap/task.hpp"

namespace decap {

// One tracked reference frame harvested from a position-policy rollout.
// ee_xz stacks the foot positions in the base frame as [x0, z0, x1, z1, ...];
// foot_z holds the world-frame foot heights.
struct ImitationFrame {
  Eigen::VectorXd q;
  Eigen::VectorXd ee_xz;
  Eigen::VectorXd foot_z;
  double base_height = 0.0;
  double v_cmd = 0.0;
  double w_cmd = 0.0;
  int step_index = 0;
};

struct ImitationTrajectory {
  Command cmd;
  std::vector<ImitationFrame> frames;
};

struct ImitationDataset {
  int format_version = 1;
  std::string robot_name;
  double dt = 0.0;
  double kp = 0.0;
  double kd = 0.0;
  std::string checkpoint_id;
  std::vector<ImitationTrajectory> trajectories;

  int n_joints() const;
  int n_feet() const;
};

// Nearest-command trajectory (Euclidean in (v_cmd, w_cmd), ties to the lower
// index) with modular frame indexing, so references loop when an episode
// outlives the recorded horizon.
const ImitationFrame& lookup(const ImitationDataset& ds, const Command& cmd, int step);

// Text format: one header line, then one line per frame, all doubles at 17
// significant digits (see docs/file_formats.md). load(save(ds)) == ds.
void save_dataset(const ImitationDataset& ds, const std::string& path);
ImitationDataset load_dataset(const std::string& path);

// Root-mean-square error over steps (scalar series) or steps x joints.
double rmse(const std::vector<double>& a, const std::vector<double>& b);
double rmse(const std::vector<Eigen::VectorXd>& a, const std::vector<Eigen::VectorXd>& b);

struct PolicyParameters;  // ppo.hpp
struct RunConfig;         // run_config.hpp
struct RobotModel;        // robot_model.hpp

// Rolls the deterministic position policy for each command and stores the
// tracked states after an initial settle window of cfg.record_settle steps.
// Each trajectory gets cfg.record_steps - cfg.record_settle frames.
ImitationDataset record_imitation(const PolicyParameters& policy, const RobotModel& model,
                                  const RunConfig& cfg, const std::vector<Command>& commands,
                                  const std::string& checkpoint_id);

}  // namespace decap
