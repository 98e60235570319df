#include "decap/imitation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "decap/env.hpp"
#include "decap/errors.hpp"
#include "decap/ppo.hpp"
#include "decap/run_config.hpp"

namespace decap {

namespace {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

int ImitationDataset::n_joints() const {
  if (trajectories.empty() || trajectories.front().frames.empty()) return 0;
  return static_cast<int>(trajectories.front().frames.front().q.size());
}

int ImitationDataset::n_feet() const {
  if (trajectories.empty() || trajectories.front().frames.empty()) return 0;
  return static_cast<int>(trajectories.front().frames.front().foot_z.size());
}

const ImitationFrame& lookup(const ImitationDataset& ds, const Command& cmd, int step) {
  if (ds.trajectories.empty()) throw std::invalid_argument("lookup: empty dataset");
  if (step < 0) throw std::invalid_argument("lookup: negative step");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
    const Command& c = ds.trajectories[i].cmd;
    const double dv = c.v_cmd - cmd.v_cmd;
    const double dw = c.w_cmd - cmd.w_cmd;
    const double d = dv * dv + dw * dw;
    if (d < best_d) {  // strict: ties keep the lower index
      best_d = d;
      best = i;
    }
  }
  const auto& frames = ds.trajectories[best].frames;
  if (frames.empty()) throw std::invalid_argument("lookup: empty trajectory");
  return frames[static_cast<std::size_t>(step) % frames.size()];
}

void save_dataset(const ImitationDataset& ds, const std::string& path) {
  if (ds.robot_name.find_first_of(" \t\n") != std::string::npos)
    throw ConfigError("save_dataset: robot name must not contain whitespace");
  std::size_t total = 0;
  for (const auto& tr : ds.trajectories) {
    if (tr.frames.empty()) throw ConfigError("save_dataset: empty trajectory");
    total += tr.frames.size();
  }

  std::ofstream out(path);
  if (!out) throw RuntimeFailure("save_dataset: cannot write '" + path + "'");
  const int n = ds.n_joints();
  const int nf = ds.n_feet();
  out << "decap-imit " << ds.format_version << ' ' << (ds.robot_name.empty() ? "-" : ds.robot_name)
      << ' ' << fmt17(ds.dt) << ' ' << fmt17(ds.kp) << ' ' << fmt17(ds.kd) << ' '
      << (ds.checkpoint_id.empty() ? "-" : ds.checkpoint_id) << ' ' << n << ' ' << nf << ' '
      << ds.trajectories.size() << ' ' << total << '\n';

  for (std::size_t ti = 0; ti < ds.trajectories.size(); ++ti) {
    for (const ImitationFrame& f : ds.trajectories[ti].frames) {
      if (f.q.size() != n || f.ee_xz.size() != 2 * nf || f.foot_z.size() != nf)
        throw ConfigError("save_dataset: frame dimensions do not match the first frame");
      out << ti << ' ' << f.step_index << ' ' << fmt17(f.v_cmd) << ' ' << fmt17(f.w_cmd) << ' '
          << fmt17(f.base_height);
      for (int i = 0; i < n; ++i) out << ' ' << fmt17(f.q[i]);
      for (int i = 0; i < 2 * nf; ++i) out << ' ' << fmt17(f.ee_xz[i]);
      for (int i = 0; i < nf; ++i) out << ' ' << fmt17(f.foot_z[i]);
      out << '\n';
    }
  }
  if (!out) throw RuntimeFailure("save_dataset: write failed for '" + path + "'");
}

ImitationDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_dataset: cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw RuntimeFailure("load_dataset: '" + path + "' is empty");

  ImitationDataset ds;
  std::size_t n_traj = 0, total = 0;
  int n = 0, nf = 0;
  {
    std::istringstream hs(line);
    std::string magic;
    hs >> magic >> ds.format_version >> ds.robot_name >> ds.dt >> ds.kp >> ds.kd >>
        ds.checkpoint_id >> n >> nf >> n_traj >> total;
    if (!hs || magic != "decap-imit")
      throw RuntimeFailure("load_dataset: '" + path + "' line 1: bad header");
    if (ds.format_version != 1)
      throw RuntimeFailure("load_dataset: unsupported format version " +
                           std::to_string(ds.format_version));
    if (ds.robot_name == "-") ds.robot_name.clear();
    if (ds.checkpoint_id == "-") ds.checkpoint_id.clear();
    if (n < 0 || nf < 0 || n_traj == 0 || total == 0)
      throw RuntimeFailure("load_dataset: '" + path + "' line 1: bad counts");
  }

  ds.trajectories.resize(n_traj);
  std::size_t line_no = 1;
  std::size_t read = 0;
  std::size_t prev_traj = 0;
  while (read < total) {
    if (!std::getline(in, line))
      throw RuntimeFailure("load_dataset: '" + path + "' truncated after line " +
                           std::to_string(line_no) + " (" + std::to_string(read) + " of " +
                           std::to_string(total) + " frames)");
    ++line_no;
    std::istringstream fs(line);
    std::size_t ti = 0;
    ImitationFrame f;
    f.q.resize(n);
    f.ee_xz.resize(2 * nf);
    f.foot_z.resize(nf);
    fs >> ti >> f.step_index >> f.v_cmd >> f.w_cmd >> f.base_height;
    for (int i = 0; i < n && fs; ++i) fs >> f.q[i];
    for (int i = 0; i < 2 * nf && fs; ++i) fs >> f.ee_xz[i];
    for (int i = 0; i < nf && fs; ++i) fs >> f.foot_z[i];
    std::string extra;
    if (!fs || (fs >> extra))
      throw RuntimeFailure("load_dataset: '" + path + "' line " + std::to_string(line_no) +
                           ": malformed frame");
    if (ti >= n_traj || ti < prev_traj)
      throw RuntimeFailure("load_dataset: '" + path + "' line " + std::to_string(line_no) +
                           ": trajectory index out of order");
    prev_traj = ti;
    auto& tr = ds.trajectories[ti];
    if (tr.frames.empty()) tr.cmd = Command{f.v_cmd, f.w_cmd};
    tr.frames.push_back(std::move(f));
    ++read;
  }
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i)
    if (ds.trajectories[i].frames.empty())
      throw RuntimeFailure("load_dataset: '" + path + "' trajectory " + std::to_string(i) +
                           " has no frames");
  return ds;
}

double rmse(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("rmse: series lengths differ or empty");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(a.size()));
}

double rmse(const std::vector<Eigen::VectorXd>& a, const std::vector<Eigen::VectorXd>& b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("rmse: series lengths differ or empty");
  double s = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size()) throw std::invalid_argument("rmse: joint counts differ");
    s += (a[i] - b[i]).squaredNorm();
    count += static_cast<std::size_t>(a[i].size());
  }
  if (count == 0) throw std::invalid_argument("rmse: empty vectors");
  return std::sqrt(s / static_cast<double>(count));
}

ImitationDataset record_imitation(const PolicyParameters& policy, const RobotModel& model,
                                  const RunConfig& cfg, const std::vector<Command>& commands,
                                  const std::string& checkpoint_id) {
  const int n = model.n_joints();
  if (policy.obs_size() != Observation::size(n) || policy.act_size() != n)
    throw ConfigError("record: policy shape (" + std::to_string(policy.obs_size()) + " -> " +
                      std::to_string(policy.act_size()) + ") does not match robot '" +
                      model.name + "'");
  if (commands.empty()) throw ConfigError("record: no commands given");
  if (cfg.record_steps <= cfg.record_settle)
    throw ConfigError("record: record_steps must exceed record_settle");

  ActionConfig act_cfg = cfg.action;
  act_cfg.mode = ActionMode::position;

  ImitationDataset ds;
  ds.robot_name = model.name;
  ds.dt = cfg.env.dt;
  ds.kp = act_cfg.gains.kp;
  ds.kd = act_cfg.gains.kd;
  ds.checkpoint_id = checkpoint_id;

  for (const Command& cmd : commands) {
    Env env(&model, cfg.env, act_cfg, cfg.rewards, false, /*seed=*/0);
    env.reset(false);
    env.set_command(cmd);

    ImitationTrajectory tr;
    tr.cmd = cmd;
    for (int t = 0; t < cfg.record_steps; ++t) {
      const Eigen::VectorXd a = act_mean(policy, env.observation());
      const EnvStepResult res = env.step(a, 0);
      if (res.fault)
        throw RuntimeFailure("record: dynamics fault at step " + std::to_string(t) +
                             " for command v=" + std::to_string(cmd.v_cmd));
      if (t < cfg.record_settle) continue;

      const FkResult fk = env.fk();
      const int nf = static_cast<int>(fk.foot_world.size());
      ImitationFrame f;
      f.q = env.state().q;
      f.base_height = env.state().base_pos.y();
      f.ee_xz.resize(2 * nf);
      f.foot_z.resize(nf);
      for (int i = 0; i < nf; ++i) {
        f.ee_xz[2 * i] = fk.ee_body[i].x();
        f.ee_xz[2 * i + 1] = fk.ee_body[i].y();
        f.foot_z[i] = fk.foot_world[i].y();
      }
      f.v_cmd = cmd.v_cmd;
      f.w_cmd = cmd.w_cmd;
      f.step_index = t - cfg.record_settle;
      tr.frames.push_back(std::move(f));
    }
    ds.trajectories.push_back(std::move(tr));
  }
  return ds;
}

}  // namespace decap
