#pragma once

#include <string>

namespace decap {

// Renders a stored run artifact as CSV. `what` selects the view:
//   learning-curve   iteration, mean_reward, decay_factor      (training run)
//   reward-breakdown iteration + one column per reward term    (training run)
//   gait-trace       per-step q / q_hat / torque columns from a
//                    deterministic rollout of the stored checkpoint
//   rmse-table       regenerates sweep.csv from sweep.jsonl, byte-identical
// `run_dir` is a training run dir (or the sweep dir for rmse-table).
// Unknown `what` or missing artifacts raise ConfigError.
void export_view(const std::string& run_dir, const std::string& what,
                 const std::string& out_path);

}  // namespace decap
