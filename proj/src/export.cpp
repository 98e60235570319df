#include "decap/export.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "decap/checkpoint.hpp"
#include "decap/env.hpp"
#include "decap/errors.hpp"
#include "decap/manifest.hpp"
#include "decap/pipeline.hpp"
#include "decap/run_config.hpp"

namespace decap {

namespace {

// The prior term of a decap policy is fully decayed at this clock value; the
// trace shows the deployed controller.
constexpr std::int64_t kTraceDecayT = 1000000000;

std::string opt_cell(double v) { return std::isnan(v) ? std::string() : format_double(v); }

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("export: cannot write '" + path + "'");
  out << body;
}

std::string learning_curve(const RunManifest& m) {
  std::string out = "iteration,mean_reward,decay_factor\n";
  for (const IterationRow& row : m.rows)
    out += std::to_string(row.iteration) + ',' + format_double(row.mean_reward) + ',' +
           format_double(row.decay_factor) + '\n';
  return out;
}

std::string reward_breakdown(const RunManifest& m) {
  std::string out = "iteration";
  for (const std::string& name : RewardBreakdown::names()) out += ",rew_" + name;
  out += '\n';
  for (const IterationRow& row : m.rows) {
    out += std::to_string(row.iteration);
    for (double v : row.term_means.values()) out += ',' + opt_cell(v);
    out += '\n';
  }
  return out;
}

std::string gait_trace(const std::string& run_dir, const RunManifest& m) {
  if (m.checkpoint_path.empty())
    throw ConfigError("export: run '" + run_dir + "' has no stored checkpoint");
  const Checkpoint ck = load_checkpoint(run_dir + "/" + m.checkpoint_path);
  const RunConfig cfg = config_from_json(m.config);
  const RobotModel model = load_model(cfg.model_path);
  const int n = model.n_joints();

  std::optional<ImitationDataset> ds;
  if (!cfg.dataset_path.empty()) ds = load_dataset(cfg.dataset_path);
  std::optional<Checkpoint> assist;
  if (cfg.action.mode == ActionMode::assisted)
    assist = load_checkpoint(cfg.position_checkpoint);
  // q_hat: reference trajectory when the run had one, else the controller's
  // own desired positions; plain torque runs leave the columns empty.
  const bool ref_hat = ds.has_value();
  const bool des_hat = !ref_hat && cfg.action.mode != ActionMode::torque;

  std::string out = "step,time";
  for (int j = 0; j < n; ++j) out += ",q" + std::to_string(j);
  for (int j = 0; j < n; ++j) out += ",q_hat" + std::to_string(j);
  for (int j = 0; j < n; ++j) out += ",tau" + std::to_string(j);
  out += '\n';

  if (cfg.eval_commands.empty()) throw ConfigError("export: run config has no eval commands");
  Env env(&model, cfg.env, cfg.action, cfg.rewards, ds.has_value(), 0);
  env.set_dataset(ds ? &*ds : nullptr);
  env.set_assist_policy(assist ? &assist->policy : nullptr);
  env.reset(false);
  env.set_command(Command{cfg.eval_commands.front(), 0.0});

  for (int t = 0; t < cfg.eval_steps; ++t) {
    Eigen::VectorXd q_hat;
    if (ref_hat) q_hat = lookup(*ds, env.command(), t).q;
    const EnvStepResult res = env.step(act_mean(ck.policy, env.observation()), kTraceDecayT);
    if (res.fault) break;
    if (des_hat) q_hat = env.last_q_des();
    out += std::to_string(t) + ',' + format_double(t * cfg.env.dt);
    for (int j = 0; j < n; ++j) out += ',' + format_double(env.state().q[j]);
    for (int j = 0; j < n; ++j)
      out += ',' + (q_hat.size() == n ? format_double(q_hat[j]) : std::string());
    for (int j = 0; j < n; ++j) out += ',' + format_double(env.last_torques()[j]);
    out += '\n';
    if (res.done) break;
  }
  return out;
}

}  // namespace

void export_view(const std::string& run_dir, const std::string& what,
                 const std::string& out_path) {
  if (!std::filesystem::is_directory(run_dir))
    throw ConfigError("export: run dir '" + run_dir + "' does not exist");

  if (what == "rmse-table") {
    if (!std::filesystem::exists(run_dir + "/sweep.jsonl"))
      throw ConfigError("export: '" + run_dir + "' has no sweep.jsonl (not a sweep dir?)");
    write_file(out_path, sweep_csv(load_sweep_table(run_dir)));
    return;
  }

  if (what != "learning-curve" && what != "reward-breakdown" && what != "gait-trace")
    throw ConfigError("export: unknown view '" + what +
                      "' (learning-curve, reward-breakdown, gait-trace, rmse-table)");
  if (!std::filesystem::exists(run_dir + "/manifest.jsonl"))
    throw ConfigError("export: '" + run_dir + "' has no manifest.jsonl (not a run dir?)");

  const RunManifest m = read_manifest(run_dir);
  if (what == "learning-curve")
    write_file(out_path, learning_curve(m));
  else if (what == "reward-breakdown")
    write_file(out_path, reward_breakdown(m));
  else
    write_file(out_path, gait_trace(run_dir, m));
}

}  // namespace decap
