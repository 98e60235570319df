#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "decap/control.hpp"
#include "decap/env.hpp"
#include "decap/ppo.hpp"
#include "decap/task.hpp"

namespace decap {

// Everything a training run needs, loadable from JSON with dotted-key
// overrides. Unknown keys are rejected so typos fail loudly.
struct RunConfig {
  int format_version = 1;
  std::string run_name = "run";
  std::string model_path;
  std::string out_dir;
  std::uint64_t seed = 1;

  int n_envs = 64;
  int iterations = 300;
  int steps_per_iteration = 160;  // per env, per iteration
  std::vector<int> hidden = {64, 64};
  double init_log_std_position = -0.6931471805599453;  // ln 0.5
  double init_log_std_torque = 0.0;                    // ln 1.0

  PpoConfig ppo;
  EnvConfig env;
  ActionConfig action;
  RewardWeights rewards;

  std::string dataset_path;          // stage-2 reference data (.imit)
  std::string position_checkpoint;   // frozen stage-1 policy (assisted mode, recording)

  int record_steps = 600;
  int record_settle = 100;
  std::vector<double> record_commands = {0.4, 0.65, 0.9};

  int eval_every = 10;
  int eval_episodes = 3;
  int eval_steps = 600;
  std::vector<double> eval_commands = {0.4, 0.65, 0.9};

  double init_log_std() const {
    return action.mode == ActionMode::position ? init_log_std_position : init_log_std_torque;
  }
};

nlohmann::json config_to_json(const RunConfig& cfg);
RunConfig config_from_json(const nlohmann::json& j);

RunConfig load_config(const std::string& path);

// Applies one `--set key=value` override on the JSON form; `key` is a dotted
// path (e.g. ppo.lr, action.mode, rewards.imitation_scale).
void apply_override(nlohmann::json& j, const std::string& assignment);

// Canonical serialized form written next to every run (sorted keys, 2-space
// indent, trailing newline); byte-stable for identical configs.
std::string config_snapshot(const RunConfig& cfg);

}  // namespace decap
