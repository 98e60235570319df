#include "decap/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "decap/errors.hpp"

namespace decap {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError("config: " + where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (allowed.find(it.key()) == allowed.end())
      throw ConfigError("config: unknown key '" + where + (where.empty() ? "" : ".") + it.key() +
                        "'");
}

template <class T>
void get_if(const json& j, const char* key, T& out, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: bad value for '" + where + (where.empty() ? "" : ".") + key + "'");
  }
}

}  // namespace

json config_to_json(const RunConfig& cfg) {
  json j;
  j["format_version"] = cfg.format_version;
  j["run_name"] = cfg.run_name;
  j["model"] = cfg.model_path;
  j["out_dir"] = cfg.out_dir;
  j["seed"] = cfg.seed;

  j["train"] = {{"n_envs", cfg.n_envs},
                {"iterations", cfg.iterations},
                {"steps_per_iteration", cfg.steps_per_iteration},
                {"hidden", cfg.hidden},
                {"init_log_std_position", cfg.init_log_std_position},
                {"init_log_std_torque", cfg.init_log_std_torque}};

  j["ppo"] = {{"gamma", cfg.ppo.gamma},
              {"lam", cfg.ppo.lam},
              {"clip_ratio", cfg.ppo.clip_ratio},
              {"value_coef", cfg.ppo.value_coef},
              {"entropy_coef", cfg.ppo.entropy_coef},
              {"max_grad_norm", cfg.ppo.max_grad_norm},
              {"epochs", cfg.ppo.epochs},
              {"minibatches", cfg.ppo.minibatches},
              {"lr", cfg.ppo.adam.lr},
              {"beta1", cfg.ppo.adam.beta1},
              {"beta2", cfg.ppo.adam.beta2},
              {"eps", cfg.ppo.adam.eps}};

  j["env"] = {{"dt", cfg.env.dt},
              {"v_cmd", {cfg.env.commands.v_lo, cfg.env.commands.v_hi}},
              {"w_cmd", {cfg.env.commands.w_lo, cfg.env.commands.w_hi}},
              {"pitch_limit", cfg.env.termination.pitch_limit},
              {"max_steps", cfg.env.termination.max_steps},
              {"init_q_noise", cfg.env.init_q_noise},
              {"init_qdot_noise", cfg.env.init_qdot_noise}};

  j["action"] = {{"mode", to_string(cfg.action.mode)},
                 {"scale_position", cfg.action.action_scale_position},
                 {"scale_torque", cfg.action.action_scale_torque},
                 {"kp", cfg.action.gains.kp},
                 {"kd", cfg.action.gains.kd},
                 {"assist_kp", cfg.action.assist_gains.kp},
                 {"assist_kd", cfg.action.assist_gains.kd},
                 {"decay_gamma", cfg.action.decay.gamma},
                 {"decay_k", cfg.action.decay.k},
                 {"decay_clock", to_string(cfg.action.decay_clock)}};

  const RewardWeights& w = cfg.rewards;
  j["rewards"] = {{"lin_vel", w.lin_vel},
                  {"ang_vel", w.ang_vel},
                  {"collisions", w.collisions},
                  {"action_rate", w.action_rate},
                  {"orientation", w.orientation},
                  {"ang_vel_penalty", w.ang_vel_penalty},
                  {"lin_vel_penalty", w.lin_vel_penalty},
                  {"joint_torques", w.joint_torques},
                  {"joint_motion", w.joint_motion},
                  {"feet_slip", w.feet_slip},
                  {"sigma_tracking", w.sigma_tracking},
                  {"im_joint_angles", w.im_joint_angles},
                  {"im_ee_position", w.im_ee_position},
                  {"im_foot_height", w.im_foot_height},
                  {"im_base_height", w.im_base_height},
                  {"sigma_joint_angles", w.sigma_joint_angles},
                  {"sigma_ee_position", w.sigma_ee_position},
                  {"sigma_foot_height", w.sigma_foot_height},
                  {"imitation_scale", w.imitation_scale}};

  j["imitation"] = {{"dataset", cfg.dataset_path},
                    {"position_checkpoint", cfg.position_checkpoint},
                    {"record_steps", cfg.record_steps},
                    {"record_settle", cfg.record_settle},
                    {"record_commands", cfg.record_commands}};

  j["eval"] = {{"every", cfg.eval_every},
               {"episodes", cfg.eval_episodes},
               {"steps", cfg.eval_steps},
               {"commands", cfg.eval_commands}};
  return j;
}

RunConfig config_from_json(const json& j) {
  check_keys(j, "",
             {"format_version", "run_name", "model", "out_dir", "seed", "train", "ppo", "env",
              "action", "rewards", "imitation", "eval"});
  RunConfig cfg;
  get_if(j, "format_version", cfg.format_version, "");
  if (cfg.format_version != 1)
    throw ConfigError("config: unsupported format_version " +
                      std::to_string(cfg.format_version));
  get_if(j, "run_name", cfg.run_name, "");
  get_if(j, "model", cfg.model_path, "");
  get_if(j, "out_dir", cfg.out_dir, "");
  get_if(j, "seed", cfg.seed, "");

  if (auto it = j.find("train"); it != j.end()) {
    check_keys(*it, "train",
               {"n_envs", "iterations", "steps_per_iteration", "hidden", "init_log_std_position",
                "init_log_std_torque"});
    get_if(*it, "n_envs", cfg.n_envs, "train");
    get_if(*it, "iterations", cfg.iterations, "train");
    get_if(*it, "steps_per_iteration", cfg.steps_per_iteration, "train");
    get_if(*it, "hidden", cfg.hidden, "train");
    get_if(*it, "init_log_std_position", cfg.init_log_std_position, "train");
    get_if(*it, "init_log_std_torque", cfg.init_log_std_torque, "train");
  }

  if (auto it = j.find("ppo"); it != j.end()) {
    check_keys(*it, "ppo",
               {"gamma", "lam", "clip_ratio", "value_coef", "entropy_coef", "max_grad_norm",
                "epochs", "minibatches", "lr", "beta1", "beta2", "eps"});
    get_if(*it, "gamma", cfg.ppo.gamma, "ppo");
    get_if(*it, "lam", cfg.ppo.lam, "ppo");
    get_if(*it, "clip_ratio", cfg.ppo.clip_ratio, "ppo");
    get_if(*it, "value_coef", cfg.ppo.value_coef, "ppo");
    get_if(*it, "entropy_coef", cfg.ppo.entropy_coef, "ppo");
    get_if(*it, "max_grad_norm", cfg.ppo.max_grad_norm, "ppo");
    get_if(*it, "epochs", cfg.ppo.epochs, "ppo");
    get_if(*it, "minibatches", cfg.ppo.minibatches, "ppo");
    get_if(*it, "lr", cfg.ppo.adam.lr, "ppo");
    get_if(*it, "beta1", cfg.ppo.adam.beta1, "ppo");
    get_if(*it, "beta2", cfg.ppo.adam.beta2, "ppo");
    get_if(*it, "eps", cfg.ppo.adam.eps, "ppo");
  }

  if (auto it = j.find("env"); it != j.end()) {
    check_keys(*it, "env",
               {"dt", "v_cmd", "w_cmd", "pitch_limit", "max_steps", "init_q_noise",
                "init_qdot_noise"});
    get_if(*it, "dt", cfg.env.dt, "env");
    std::vector<double> v{cfg.env.commands.v_lo, cfg.env.commands.v_hi};
    std::vector<double> w{cfg.env.commands.w_lo, cfg.env.commands.w_hi};
    get_if(*it, "v_cmd", v, "env");
    get_if(*it, "w_cmd", w, "env");
    if (v.size() != 2 || w.size() != 2)
      throw ConfigError("config: env.v_cmd and env.w_cmd must be [lo, hi]");
    cfg.env.commands = {v[0], v[1], w[0], w[1]};
    get_if(*it, "pitch_limit", cfg.env.termination.pitch_limit, "env");
    get_if(*it, "max_steps", cfg.env.termination.max_steps, "env");
    get_if(*it, "init_q_noise", cfg.env.init_q_noise, "env");
    get_if(*it, "init_qdot_noise", cfg.env.init_qdot_noise, "env");
  }

  if (auto it = j.find("action"); it != j.end()) {
    check_keys(*it, "action",
               {"mode", "scale_position", "scale_torque", "kp", "kd", "assist_kp", "assist_kd",
                "decay_gamma", "decay_k", "decay_clock"});
    std::string mode = to_string(cfg.action.mode);
    std::string clock = to_string(cfg.action.decay_clock);
    get_if(*it, "mode", mode, "action");
    get_if(*it, "decay_clock", clock, "action");
    cfg.action.mode = action_mode_from_string(mode);
    cfg.action.decay_clock = decay_clock_from_string(clock);
    get_if(*it, "scale_position", cfg.action.action_scale_position, "action");
    get_if(*it, "scale_torque", cfg.action.action_scale_torque, "action");
    get_if(*it, "kp", cfg.action.gains.kp, "action");
    get_if(*it, "kd", cfg.action.gains.kd, "action");
    get_if(*it, "assist_kp", cfg.action.assist_gains.kp, "action");
    get_if(*it, "assist_kd", cfg.action.assist_gains.kd, "action");
    get_if(*it, "decay_gamma", cfg.action.decay.gamma, "action");
    get_if(*it, "decay_k", cfg.action.decay.k, "action");
  }

  if (auto it = j.find("rewards"); it != j.end()) {
    check_keys(*it, "rewards",
               {"lin_vel", "ang_vel", "collisions", "action_rate", "orientation",
                "ang_vel_penalty", "lin_vel_penalty", "joint_torques", "joint_motion",
                "feet_slip", "sigma_tracking", "im_joint_angles", "im_ee_position",
                "im_foot_height", "im_base_height", "sigma_joint_angles", "sigma_ee_position",
                "sigma_foot_height", "imitation_scale"});
    RewardWeights& w = cfg.rewards;
    get_if(*it, "lin_vel", w.lin_vel, "rewards");
    get_if(*it, "ang_vel", w.ang_vel, "rewards");
    get_if(*it, "collisions", w.collisions, "rewards");
    get_if(*it, "action_rate", w.action_rate, "rewards");
    get_if(*it, "orientation", w.orientation, "rewards");
    get_if(*it, "ang_vel_penalty", w.ang_vel_penalty, "rewards");
    get_if(*it, "lin_vel_penalty", w.lin_vel_penalty, "rewards");
    get_if(*it, "joint_torques", w.joint_torques, "rewards");
    get_if(*it, "joint_motion", w.joint_motion, "rewards");
    get_if(*it, "feet_slip", w.feet_slip, "rewards");
    get_if(*it, "sigma_tracking", w.sigma_tracking, "rewards");
    get_if(*it, "im_joint_angles", w.im_joint_angles, "rewards");
    get_if(*it, "im_ee_position", w.im_ee_position, "rewards");
    get_if(*it, "im_foot_height", w.im_foot_height, "rewards");
    get_if(*it, "im_base_height", w.im_base_height, "rewards");
    get_if(*it, "sigma_joint_angles", w.sigma_joint_angles, "rewards");
    get_if(*it, "sigma_ee_position", w.sigma_ee_position, "rewards");
    get_if(*it, "sigma_foot_height", w.sigma_foot_height, "rewards");
    get_if(*it, "imitation_scale", w.imitation_scale, "rewards");
  }

  if (auto it = j.find("imitation"); it != j.end()) {
    check_keys(*it, "imitation",
               {"dataset", "position_checkpoint", "record_steps", "record_settle",
                "record_commands"});
    get_if(*it, "dataset", cfg.dataset_path, "imitation");
    get_if(*it, "position_checkpoint", cfg.position_checkpoint, "imitation");
    get_if(*it, "record_steps", cfg.record_steps, "imitation");
    get_if(*it, "record_settle", cfg.record_settle, "imitation");
    get_if(*it, "record_commands", cfg.record_commands, "imitation");
  }

  if (auto it = j.find("eval"); it != j.end()) {
    check_keys(*it, "eval", {"every", "episodes", "steps", "commands"});
    get_if(*it, "every", cfg.eval_every, "eval");
    get_if(*it, "episodes", cfg.eval_episodes, "eval");
    get_if(*it, "steps", cfg.eval_steps, "eval");
    get_if(*it, "commands", cfg.eval_commands, "eval");
  }

  if (cfg.n_envs <= 0 || cfg.iterations <= 0 || cfg.steps_per_iteration <= 0)
    throw ConfigError("config: train sizes must be positive");
  if (cfg.env.dt <= 0.0) throw ConfigError("config: env.dt must be > 0");
  if (cfg.ppo.epochs <= 0 || cfg.ppo.minibatches <= 0)
    throw ConfigError("config: ppo.epochs and ppo.minibatches must be positive");
  cfg.rewards.dt = cfg.env.dt;
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config: parse error in '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "' must look like key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);

  // Walk the dotted path; every segment must already exist so typos fail.
  json* node = &j;
  std::stringstream ss(key);
  std::string seg;
  std::vector<std::string> segs;
  while (std::getline(ss, seg, '.')) segs.push_back(seg);
  if (segs.empty()) throw ConfigError("override '" + assignment + "': empty key");
  for (std::size_t i = 0; i + 1 < segs.size(); ++i) {
    auto it = node->find(segs[i]);
    if (it == node->end() || !it->is_object())
      throw ConfigError("override: unknown config section '" + segs[i] + "'");
    node = &*it;
  }
  auto it = node->find(segs.back());
  if (it == node->end()) throw ConfigError("override: unknown config key '" + key + "'");

  json parsed = json::parse(value, nullptr, false);
  if (parsed.is_discarded()) parsed = value;  // not a JSON literal: treat as string
  *it = parsed;
}

std::string config_snapshot(const RunConfig& cfg) {
  json j = config_to_json(cfg);
  std::ostringstream out;
  out << j.dump(2) << "\n";
  return out.str();
}

}  // namespace decap
