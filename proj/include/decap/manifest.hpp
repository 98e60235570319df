#pragma once

#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "decap/ppo.hpp"
#include "decap/run_config.hpp"
#include "decap/task.hpp"

namespace decap {

// One training iteration. Eval columns are NaN (null/empty on disk) on
// iterations without an eval probe. mean_reward always equals the sum of the
// per-term means.
struct IterationRow {
  int iteration = 0;  // 1-based
  std::int64_t global_steps = 0;
  double mean_reward = 0.0;
  RewardBreakdown term_means;
  double mean_ep_return = 0.0;
  double mean_ep_length = 0.0;
  int episodes = 0;
  int faults = 0;
  double decay_factor = 1.0;
  double action_std = 0.0;
  UpdateStats update;
  double eval_reward = std::numeric_limits<double>::quiet_NaN();
  double eval_phi_v = std::numeric_limits<double>::quiet_NaN();
  double eval_vel_rmse = std::numeric_limits<double>::quiet_NaN();
  double eval_joint_rmse = std::numeric_limits<double>::quiet_NaN();
  double eval_ep_length = std::numeric_limits<double>::quiet_NaN();
};

struct RunManifest {
  nlohmann::json config;
  std::string checkpoint_path;  // relative to the run dir
  std::vector<IterationRow> rows;
};

const std::vector<std::string>& manifest_columns();
nlohmann::json row_to_json(const IterationRow& row);
IterationRow row_from_json(const nlohmann::json& j);
std::string row_to_csv(const IterationRow& row);
std::string csv_header();

// Streams rows to <dir>/manifest.jsonl and <dir>/manifest.csv as training
// runs, so an aborted run still leaves a readable manifest. The config
// snapshot goes to <dir>/config.json on construction. Byte-deterministic for
// identical inputs; wall-clock lands in run_info.json, which is not.
class ManifestWriter {
 public:
  ManifestWriter(const std::string& dir, const RunConfig& cfg);
  void append(const IterationRow& row);
  // Writes run_info.json (wall-clock and artifact paths) and closes.
  void finish(const std::string& checkpoint_rel, double wall_seconds);

  const std::string& dir() const { return dir_; }

 private:
  std::string dir_;
  std::ofstream jsonl_;
  std::ofstream csv_;
};

RunManifest read_manifest(const std::string& dir);

// %.17g, the project-wide text format for doubles.
std::string format_double(double v);

}  // namespace decap
