#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "decap/checkpoint.hpp"
#include "decap/imitation.hpp"
#include "decap/manifest.hpp"
#include "decap/run_config.hpp"

namespace decap {

struct EvalMetrics {
  double mean_reward = 0.0;  // per step; equals term_means.total()
  RewardBreakdown term_means;
  double mean_phi_v = 0.0;      // velocity-tracking kernel exp(-v_err^2 / sigma)
  double mean_abs_v_err = 0.0;  // mean tracking error, m/s
  double vel_rmse = 0.0;
  double joint_rmse = std::numeric_limits<double>::quiet_NaN();  // needs reference data
  double fall_rate = 0.0;  // episodes ended by contact/orientation/fault
  double mean_ep_length = 0.0;
  int episodes = 0;
};

// Deterministic mean-action evaluation: cfg.eval_episodes episodes per
// command in cfg.eval_commands, fixed seeds. For decap policies the prior is
// evaluated fully decayed (the deployed controller is the bare torque
// policy); assisted policies keep their low-gain assistance.
EvalMetrics evaluate_policy(const PolicyParameters& policy, const RobotModel& model,
                            const RunConfig& cfg, const ImitationDataset* reference,
                            const PolicyParameters* assist);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<IterationRow> rows;
  std::string run_dir;
  double final_rmse = std::numeric_limits<double>::quiet_NaN();  // mean of last 3 probes
};

// Stage 1: position-space policy, shaping rewards only.
TrainResult train_position(const RunConfig& cfg);

// Stage 2: torque-space policy (torque / decap / assisted). decap requires
// cfg.dataset_path; a dataset enables the imitation reward terms; assisted
// requires cfg.position_checkpoint.
TrainResult train_torque(const RunConfig& cfg);

struct SweepCell {
  double scale = 1.0;
  std::string mode;  // "imitation" or "decap"
  std::uint64_t seed = 0;
  double rmse = std::numeric_limits<double>::quiet_NaN();
  double rmse_mean = std::numeric_limits<double>::quiet_NaN();  // over seeds of (scale, mode)
  double eval_reward = std::numeric_limits<double>::quiet_NaN();
  std::string status = "ok";
  std::string run_dir;  // relative to the sweep dir
};

struct SweepTable {
  std::vector<SweepCell> cells;
};

// One stage-2 run per (scale, mode, seed): the three exponential imitation
// weights are multiplied by scale; cell failures are recorded in-table and
// the sweep continues. Writes sweep.jsonl + sweep.csv under out_dir.
SweepTable run_sweep(const RunConfig& base, const std::vector<double>& scales,
                     const std::vector<std::string>& modes,
                     const std::vector<std::uint64_t>& seeds, const std::string& out_dir);

std::string sweep_csv(const SweepTable& table);
void save_sweep_table(const SweepTable& table, const std::string& dir);
SweepTable load_sweep_table(const std::string& dir);

nlohmann::json eval_to_json(const EvalMetrics& m);

}  // namespace decap
