#include "decap/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <optional>
#include <sstream>

#include "decap/env.hpp"
#include "decap/errors.hpp"
#include "decap/rollout.hpp"

namespace decap {

using nlohmann::json;

namespace {

// Evaluation always runs the deployable controller: for decap policies the
// prior term is fully decayed by this clock value.
constexpr std::int64_t kEvalDecayT = 1000000000;

void obs_normalization(const RobotModel& model, Eigen::VectorXd& shift, Eigen::VectorXd& scale) {
  const int n = model.n_joints();
  const int d = Observation::size(n);
  shift = Eigen::VectorXd::Zero(d);
  scale = Eigen::VectorXd::Ones(d);
  shift.segment(4, n) = model.q_nom;  // joint angles enter relative to nominal
  scale[2] = 2.0;                     // v_cmd
  scale[3] = 0.25;                    // w_cmd
  scale.segment(4 + n, n).setConstant(0.05);  // joint velocities
}

double phi_kernel(double err, double sigma) { return std::exp(-err * err / sigma); }

EvalMetrics eval_episodes(const PolicyParameters& policy, const RobotModel& model,
                          const RunConfig& cfg, const ImitationDataset* reference,
                          const PolicyParameters* assist, int episodes_per_cmd) {
  const int n = model.n_joints();
  if (policy.obs_size() != Observation::size(n) || policy.act_size() != n)
    throw ConfigError("evaluate: checkpoint shape (" + std::to_string(policy.obs_size()) +
                      " -> " + std::to_string(policy.act_size()) + ") does not match robot '" +
                      model.name + "'");
  if (episodes_per_cmd <= 0) throw ConfigError("evaluate: episode count must be positive");
  if (cfg.eval_commands.empty()) throw ConfigError("evaluate: no eval commands configured");
  if (cfg.action.mode == ActionMode::assisted && assist == nullptr)
    throw ConfigError("evaluate: assisted mode needs the position checkpoint "
                      "(imitation.position_checkpoint)");
  const bool use_im = reference != nullptr;

  EvalMetrics m;
  std::int64_t total_steps = 0;
  std::int64_t ep_len_sum = 0;
  int falls = 0;
  std::vector<double> v_track, v_ref;
  std::vector<Eigen::VectorXd> q_track, q_ref;

  for (std::size_t ci = 0; ci < cfg.eval_commands.size(); ++ci) {
    for (int ep = 0; ep < episodes_per_cmd; ++ep) {
      Env env(&model, cfg.env, cfg.action, cfg.rewards, use_im,
              mix_seed(0xE7A1u, static_cast<std::uint64_t>(ci) * 1000 + ep));
      env.set_dataset(reference);
      env.set_assist_policy(assist);
      env.reset(ep != 0);  // first episode per command starts from the clean pose
      env.set_command(Command{cfg.eval_commands[ci], 0.0});

      int steps = 0;
      bool fell = false;
      for (int t = 0; t < cfg.eval_steps; ++t) {
        if (use_im) q_ref.push_back(lookup(*reference, env.command(), t).q);
        const EnvStepResult res = env.step(act_mean(policy, env.observation()), kEvalDecayT);
        if (res.fault) {
          fell = true;
          break;
        }
        m.term_means += res.breakdown;
        const double v_err = env.command().v_cmd - env.state().base_vel.x();
        m.mean_phi_v += phi_kernel(v_err, cfg.rewards.sigma_tracking);
        m.mean_abs_v_err += std::abs(v_err);
        v_track.push_back(env.state().base_vel.x());
        v_ref.push_back(env.command().v_cmd);
        if (use_im) q_track.push_back(env.state().q);
        ++steps;
        if (res.done) {
          fell = res.reason == TerminationReason::base_contact ||
                 res.reason == TerminationReason::orientation;
          break;
        }
      }
      if (use_im && q_ref.size() > q_track.size()) q_ref.pop_back();  // fault step dropped
      total_steps += steps;
      ep_len_sum += steps;
      if (fell) ++falls;
      ++m.episodes;
    }
  }

  if (total_steps > 0) {
    m.term_means *= 1.0 / static_cast<double>(total_steps);
    m.mean_reward = m.term_means.total();
    m.mean_phi_v /= static_cast<double>(total_steps);
    m.mean_abs_v_err /= static_cast<double>(total_steps);
    m.vel_rmse = rmse(v_track, v_ref);
    if (use_im && !q_track.empty()) m.joint_rmse = rmse(q_track, q_ref);
  }
  m.fall_rate = m.episodes > 0 ? static_cast<double>(falls) / m.episodes : 0.0;
  m.mean_ep_length =
      m.episodes > 0 ? static_cast<double>(ep_len_sum) / m.episodes : 0.0;
  return m;
}

struct StageData {
  RobotModel model;
  std::optional<ImitationDataset> dataset;
  std::optional<Checkpoint> assist;
};

StageData load_stage_data(const RunConfig& cfg) {
  StageData d;
  if (cfg.model_path.empty()) throw ConfigError("train: config field 'model' is empty");
  d.model = load_model(cfg.model_path);

  if (!cfg.dataset_path.empty()) {
    d.dataset = load_dataset(cfg.dataset_path);
    if (d.dataset->robot_name != d.model.name)
      throw ConfigError("train: dataset robot '" + d.dataset->robot_name +
                        "' does not match model '" + d.model.name + "'");
    if (std::abs(d.dataset->dt - cfg.env.dt) > 1e-12)
      std::fprintf(stderr, "warning: dataset dt %g differs from env dt %g\n", d.dataset->dt,
                   cfg.env.dt);
  }

  if (!cfg.position_checkpoint.empty()) {
    d.assist = load_checkpoint(cfg.position_checkpoint);
    if (d.assist->robot_name != d.model.name)
      throw ConfigError("train: position checkpoint robot '" + d.assist->robot_name +
                        "' does not match model '" + d.model.name + "'");
    if (d.assist->mode != "position")
      throw ConfigError("train: checkpoint '" + cfg.position_checkpoint +
                        "' is not a position-mode policy");
    if (d.dataset && !d.dataset->checkpoint_id.empty() &&
        d.dataset->checkpoint_id != d.assist->id)
      std::fprintf(stderr,
                   "provenance warning: dataset was recorded from checkpoint %s, not %s\n",
                   d.dataset->checkpoint_id.c_str(), d.assist->id.c_str());
  }
  return d;
}

double mean_last_probes(const std::deque<double>& probes, int count) {
  double sum = 0.0;
  int used = 0;
  for (auto it = probes.rbegin(); it != probes.rend() && used < count; ++it) {
    if (std::isnan(*it)) continue;
    sum += *it;
    ++used;
  }
  return used > 0 ? sum / used : std::numeric_limits<double>::quiet_NaN();
}

TrainResult train_core(const RunConfig& cfg) {
  if (cfg.out_dir.empty()) throw ConfigError("train: config field 'out_dir' is empty");
  StageData data = load_stage_data(cfg);
  const RobotModel& model = data.model;
  const ImitationDataset* ds = data.dataset ? &*data.dataset : nullptr;
  const PolicyParameters* assist = data.assist ? &data.assist->policy : nullptr;
  const bool use_im = ds != nullptr;
  const int n = model.n_joints();

  Eigen::VectorXd shift, scale;
  obs_normalization(model, shift, scale);
  Rng init_rng(mix_seed(cfg.seed, 0xA));
  PolicyParameters policy = make_policy(Observation::size(n), n, cfg.hidden, cfg.init_log_std(),
                                        shift, scale, init_rng);
  PpoOptimizer opt;
  opt.init(policy);
  Rng train_rng(mix_seed(cfg.seed, 0xB));

  std::vector<Env> envs;
  envs.reserve(static_cast<std::size_t>(cfg.n_envs));
  for (int e = 0; e < cfg.n_envs; ++e) {
    envs.emplace_back(&model, cfg.env, cfg.action, cfg.rewards, use_im,
                      mix_seed(cfg.seed, 0x1000 + static_cast<std::uint64_t>(e)));
    envs.back().set_dataset(ds);
    envs.back().set_assist_policy(assist);
    envs.back().reset(true);
  }

  ManifestWriter writer(cfg.out_dir, cfg);
  const auto wall_start = std::chrono::steady_clock::now();
  auto wall_seconds = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  };

  TrainResult result;
  result.run_dir = cfg.out_dir;
  std::int64_t global_step = 0;
  std::deque<double> rmse_probes;

  for (int iter = 1; iter <= cfg.iterations; ++iter) {
    RolloutResult rr = collect_rollouts(envs, policy, cfg.steps_per_iteration, cfg.ppo.gamma,
                                        cfg.ppo.lam, cfg.action.decay_clock, global_step,
                                        train_rng);
    const UpdateStats us = ppo_update(policy, opt, rr.batch, cfg.ppo, train_rng);

    IterationRow row;
    row.iteration = iter;
    row.global_steps = global_step;
    row.term_means = rr.stats.term_means;
    row.mean_reward = rr.stats.mean_reward;
    row.mean_ep_return = rr.stats.mean_ep_return;
    row.mean_ep_length = rr.stats.mean_ep_length;
    row.episodes = rr.stats.episodes;
    row.faults = rr.stats.faults;
    row.decay_factor = cfg.action.mode == ActionMode::decap
                           ? decay_factor(cfg.action.decay, global_step)
                           : 1.0;
    row.action_std = policy.log_std.array().exp().mean();
    row.update = us;

    if (!us.aborted && (iter % cfg.eval_every == 0 || iter == cfg.iterations)) {
      const EvalMetrics probe = eval_episodes(policy, model, cfg, ds, assist, 1);
      row.eval_reward = probe.mean_reward;
      row.eval_phi_v = probe.mean_phi_v;
      row.eval_vel_rmse = probe.vel_rmse;
      row.eval_joint_rmse = probe.joint_rmse;
      row.eval_ep_length = probe.mean_ep_length;
      rmse_probes.push_back(probe.joint_rmse);
      std::printf("iter %4d/%d  reward/step %8.4f  eval %8.4f  vel_rmse %.3f", iter,
                  cfg.iterations, row.mean_reward, probe.mean_reward, probe.vel_rmse);
      if (!std::isnan(probe.joint_rmse)) std::printf("  joint_rmse %.4f", probe.joint_rmse);
      if (cfg.action.mode == ActionMode::decap) std::printf("  decay %.3f", row.decay_factor);
      std::printf("\n");
      std::fflush(stdout);
    }

    writer.append(row);
    result.rows.push_back(row);

    if (us.aborted) {
      writer.finish("", wall_seconds());
      throw RuntimeFailure("training diverged (non-finite loss) at iteration " +
                           std::to_string(iter) + "; manifest preserved in '" + cfg.out_dir +
                           "'");
    }
  }

  Checkpoint ck;
  ck.robot_name = model.name;
  ck.mode = to_string(cfg.action.mode);
  ck.iterations = cfg.iterations;
  ck.policy = policy;
  ck.id = save_checkpoint(ck, cfg.out_dir + "/policy.ckpt");
  writer.finish("policy.ckpt", wall_seconds());

  result.checkpoint = std::move(ck);
  result.final_rmse = mean_last_probes(rmse_probes, 3);
  return result;
}

std::string cell_tag(double scale, const std::string& mode, std::uint64_t seed) {
  std::ostringstream out;
  out << mode << "_scale" << scale << "_seed" << seed;
  std::string s = out.str();
  for (char& c : s)
    if (c == '.') c = 'p';
  return s;
}

std::string csv_safe(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

json cell_to_json(const SweepCell& c) {
  json j;
  j["scale"] = c.scale;
  j["mode"] = c.mode;
  j["seed"] = c.seed;
  if (std::isnan(c.rmse))
    j["rmse"] = nullptr;
  else
    j["rmse"] = c.rmse;
  if (std::isnan(c.rmse_mean))
    j["rmse_mean"] = nullptr;
  else
    j["rmse_mean"] = c.rmse_mean;
  if (std::isnan(c.eval_reward))
    j["eval_reward"] = nullptr;
  else
    j["eval_reward"] = c.eval_reward;
  j["status"] = c.status;
  j["run_dir"] = c.run_dir;
  return j;
}

SweepCell cell_from_json(const json& j) {
  SweepCell c;
  c.scale = j.at("scale").get<double>();
  c.mode = j.at("mode").get<std::string>();
  c.seed = j.at("seed").get<std::uint64_t>();
  if (!j.at("rmse").is_null()) c.rmse = j.at("rmse").get<double>();
  if (!j.at("rmse_mean").is_null()) c.rmse_mean = j.at("rmse_mean").get<double>();
  if (j.contains("eval_reward") && !j.at("eval_reward").is_null())
    c.eval_reward = j.at("eval_reward").get<double>();
  c.status = j.at("status").get<std::string>();
  c.run_dir = j.at("run_dir").get<std::string>();
  return c;
}

}  // namespace

EvalMetrics evaluate_policy(const PolicyParameters& policy, const RobotModel& model,
                            const RunConfig& cfg, const ImitationDataset* reference,
                            const PolicyParameters* assist) {
  return eval_episodes(policy, model, cfg, reference, assist, cfg.eval_episodes);
}

TrainResult train_position(const RunConfig& cfg) {
  if (cfg.action.mode != ActionMode::position)
    throw ConfigError("train_position: config mode is '" + std::string(to_string(cfg.action.mode)) +
                      "'; this entry point trains position policies");
  if (!cfg.dataset_path.empty())
    throw ConfigError("train_position: imitation.dataset must be empty (imitation rewards are a "
                      "stage-2 input)");
  return train_core(cfg);
}

TrainResult train_torque(const RunConfig& cfg) {
  if (cfg.action.mode == ActionMode::position)
    throw ConfigError("train_torque: config mode is 'position'; use train-position instead");
  if (cfg.action.mode == ActionMode::decap && cfg.dataset_path.empty())
    throw ConfigError("train_torque: decap mode requires an imitation dataset "
                      "(--imitation or config imitation.dataset)");
  if (cfg.action.mode == ActionMode::assisted && cfg.position_checkpoint.empty())
    throw ConfigError("train_torque: assisted mode requires the stage-1 checkpoint "
                      "(--position-checkpoint or config imitation.position_checkpoint)");
  return train_core(cfg);
}

SweepTable run_sweep(const RunConfig& base, const std::vector<double>& scales,
                     const std::vector<std::string>& modes,
                     const std::vector<std::uint64_t>& seeds, const std::string& out_dir) {
  if (scales.empty() || modes.empty() || seeds.empty())
    throw ConfigError("sweep: scales, modes and seeds must be non-empty");
  for (const std::string& m : modes)
    if (m != "imitation" && m != "decap")
      throw ConfigError("sweep: unknown mode '" + m + "' (expected imitation or decap)");
  if (base.dataset_path.empty())
    throw ConfigError("sweep: base config needs imitation.dataset (record imitation data first)");
  if (out_dir.empty()) throw ConfigError("sweep: output dir is empty");

  SweepTable table;
  for (double scale : scales) {
    for (const std::string& mode : modes) {
      for (std::uint64_t seed : seeds) {
        RunConfig cfg = base;
        cfg.rewards.im_joint_angles *= scale;
        cfg.rewards.im_ee_position *= scale;
        cfg.rewards.im_foot_height *= scale;
        cfg.action.mode = mode == "imitation" ? ActionMode::torque : ActionMode::decap;
        cfg.seed = seed;
        cfg.run_name = cell_tag(scale, mode, seed);
        cfg.out_dir = out_dir + "/" + cfg.run_name;

        SweepCell cell;
        cell.scale = scale;
        cell.mode = mode;
        cell.seed = seed;
        cell.run_dir = cfg.run_name;
        try {
          const TrainResult res = train_torque(cfg);
          cell.rmse = res.final_rmse;
          for (auto it = res.rows.rbegin(); it != res.rows.rend(); ++it)
            if (!std::isnan(it->eval_reward)) {
              cell.eval_reward = it->eval_reward;
              break;
            }
        } catch (const std::exception& e) {
          cell.status = csv_safe(std::string("failed: ") + e.what());
        }
        table.cells.push_back(std::move(cell));
      }
    }
  }

  // across-seed mean per (scale, mode), over successful cells
  for (SweepCell& c : table.cells) {
    double sum = 0.0;
    int count = 0;
    for (const SweepCell& o : table.cells)
      if (o.scale == c.scale && o.mode == c.mode && o.status == "ok" && !std::isnan(o.rmse)) {
        sum += o.rmse;
        ++count;
      }
    c.rmse_mean = count > 0 ? sum / count : std::numeric_limits<double>::quiet_NaN();
  }

  save_sweep_table(table, out_dir);
  return table;
}

std::string sweep_csv(const SweepTable& table) {
  std::string out = "scale,mode,seed,rmse,rmse_mean,eval_reward,status,run_dir\n";
  for (const SweepCell& c : table.cells) {
    auto opt = [](double v) { return std::isnan(v) ? std::string() : format_double(v); };
    out += format_double(c.scale);
    out += ',' + c.mode + ',' + std::to_string(c.seed) + ',' + opt(c.rmse) + ',' +
           opt(c.rmse_mean) + ',' + opt(c.eval_reward) + ',' + csv_safe(c.status) + ',' +
           csv_safe(c.run_dir) + '\n';
  }
  return out;
}

void save_sweep_table(const SweepTable& table, const std::string& dir) {
  std::ofstream jsonl(dir + "/sweep.jsonl");
  if (!jsonl) throw RuntimeFailure("sweep: cannot write '" + dir + "/sweep.jsonl'");
  for (const SweepCell& c : table.cells) jsonl << cell_to_json(c).dump() << '\n';
  std::ofstream csv(dir + "/sweep.csv");
  if (!csv) throw RuntimeFailure("sweep: cannot write '" + dir + "/sweep.csv'");
  csv << sweep_csv(table);
}

SweepTable load_sweep_table(const std::string& dir) {
  std::ifstream in(dir + "/sweep.jsonl");
  if (!in) throw RuntimeFailure("sweep: missing '" + dir + "/sweep.jsonl'");
  SweepTable table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw RuntimeFailure("sweep: '" + dir + "/sweep.jsonl' line " + std::to_string(line_no) +
                           ": malformed JSON");
    try {
      table.cells.push_back(cell_from_json(j));
    } catch (const json::exception& e) {
      throw RuntimeFailure("sweep: '" + dir + "/sweep.jsonl' line " + std::to_string(line_no) +
                           ": " + e.what());
    }
  }
  return table;
}

json eval_to_json(const EvalMetrics& m) {
  json j;
  j["mean_reward"] = m.mean_reward;
  const auto& names = RewardBreakdown::names();
  const auto vals = m.term_means.values();
  for (std::size_t i = 0; i < names.size(); ++i) j["rew_" + names[i]] = vals[i];
  j["mean_phi_v"] = m.mean_phi_v;
  j["mean_abs_v_err"] = m.mean_abs_v_err;
  j["vel_rmse"] = m.vel_rmse;
  if (std::isnan(m.joint_rmse))
    j["joint_rmse"] = nullptr;
  else
    j["joint_rmse"] = m.joint_rmse;
  j["fall_rate"] = m.fall_rate;
  j["mean_ep_length"] = m.mean_ep_length;
  j["episodes"] = m.episodes;
  return j;
}

}  // namespace decap
