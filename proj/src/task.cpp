#include "decap/task.hpp"

#include <cmath>
#include <stdexcept>

#include "decap/imitation.hpp"

namespace decap {

Eigen::VectorXd Observation::flatten() const {
  const int n = static_cast<int>(q.size());
  Eigen::VectorXd out(size(n));
  out[0] = g_proj.x();
  out[1] = g_proj.y();
  out[2] = v_cmd;
  out[3] = w_cmd;
  out.segment(4, n) = q;
  out.segment(4 + n, n) = qdot;
  out.segment(4 + 2 * n, n) = a_prev;
  return out;
}

Observation observe(const SimState& state, const Command& cmd, const Eigen::VectorXd& a_prev) {
  if (a_prev.size() != state.q.size())
    throw std::invalid_argument("observe: a_prev size does not match joint count");
  Observation obs;
  obs.g_proj = Eigen::Vector2d(std::sin(state.base_pitch), -std::cos(state.base_pitch));
  obs.v_cmd = cmd.v_cmd;
  obs.w_cmd = cmd.w_cmd;
  obs.q = state.q;
  obs.qdot = state.qdot;
  obs.a_prev = a_prev;
  return obs;
}

double RewardBreakdown::total() const {
  double sum = 0.0;
  for (double v : values()) sum += v;
  return sum;
}

std::vector<double> RewardBreakdown::values() const {
  return {lin_vel,         ang_vel,       collisions, action_rate,     orientation,
          ang_vel_penalty, lin_vel_penalty, joint_torques, joint_motion, feet_slip,
          im_joint_angles, im_ee_position, im_foot_height, im_base_height};
}

const std::vector<std::string>& RewardBreakdown::names() {
  static const std::vector<std::string> n = {
      "lin_vel",         "ang_vel",         "collisions",    "action_rate",
      "orientation",     "ang_vel_penalty", "lin_vel_penalty", "joint_torques",
      "joint_motion",    "feet_slip",       "im_joint_angles", "im_ee_position",
      "im_foot_height",  "im_base_height"};
  return n;
}

RewardBreakdown& RewardBreakdown::operator*=(double s) {
  lin_vel *= s;
  ang_vel *= s;
  collisions *= s;
  action_rate *= s;
  orientation *= s;
  ang_vel_penalty *= s;
  lin_vel_penalty *= s;
  joint_torques *= s;
  joint_motion *= s;
  feet_slip *= s;
  im_joint_angles *= s;
  im_ee_position *= s;
  im_foot_height *= s;
  im_base_height *= s;
  return *this;
}

RewardBreakdown& RewardBreakdown::operator+=(const RewardBreakdown& other) {
  lin_vel += other.lin_vel;
  ang_vel += other.ang_vel;
  collisions += other.collisions;
  action_rate += other.action_rate;
  orientation += other.orientation;
  ang_vel_penalty += other.ang_vel_penalty;
  lin_vel_penalty += other.lin_vel_penalty;
  joint_torques += other.joint_torques;
  joint_motion += other.joint_motion;
  feet_slip += other.feet_slip;
  im_joint_angles += other.im_joint_angles;
  im_ee_position += other.im_ee_position;
  im_foot_height += other.im_foot_height;
  im_base_height += other.im_base_height;
  return *this;
}

namespace {
double phi(double err_sq, double sigma) { return std::exp(-err_sq / sigma); }
}  // namespace

RewardBreakdown shaping_reward(const SimState& prev, const SimState& curr,
                               const Eigen::VectorXd& torques, const ContactReport& contact,
                               const Command& cmd, const Eigen::VectorXd& a_prev,
                               const Eigen::VectorXd& a_curr, const RewardWeights& w) {
  if (a_prev.size() != a_curr.size())
    throw std::invalid_argument("shaping_reward: action size mismatch");
  const double dt = w.dt;
  RewardBreakdown r;

  const double v_err = cmd.v_cmd - curr.base_vel.x();
  r.lin_vel = w.lin_vel * dt * phi(v_err * v_err, w.sigma_tracking);

  const double w_err = cmd.w_cmd - curr.pitch_rate;
  r.ang_vel = w.ang_vel * dt * phi(w_err * w_err, w.sigma_tracking);

  r.collisions = -w.collisions * dt * contact.n_collisions();

  r.action_rate = -w.action_rate * dt * ((a_curr - a_prev) / dt).norm();

  r.orientation = -w.orientation * dt * curr.base_pitch * curr.base_pitch;

  r.ang_vel_penalty = -w.ang_vel_penalty * curr.pitch_rate * curr.pitch_rate;

  r.lin_vel_penalty = -w.lin_vel_penalty * dt * curr.base_vel.y() * curr.base_vel.y();

  r.joint_torques = -w.joint_torques * dt * torques.squaredNorm();

  const Eigen::VectorXd qddot = (curr.qdot - prev.qdot) / dt;
  r.joint_motion = -w.joint_motion * dt * (qddot.squaredNorm() + curr.qdot.squaredNorm());

  double slip = 0.0;
  for (int i = 0; i < static_cast<int>(contact.in_contact.size()); ++i)
    if (contact.in_contact[i]) slip += std::abs(contact.foot_vel_x[i]);
  r.feet_slip = -w.feet_slip * dt * slip;

  return r;
}

RewardBreakdown imitation_reward(const SimState& curr, const ImitationFrame& ref,
                                 const FkResult& fk, const RewardWeights& w) {
  if (ref.q.size() != curr.q.size())
    throw std::invalid_argument("imitation_reward: reference joint count " +
                                std::to_string(ref.q.size()) + " does not match state " +
                                std::to_string(curr.q.size()));
  const int nf = static_cast<int>(fk.foot_world.size());
  if (ref.foot_z.size() != nf || ref.ee_xz.size() != 2 * nf)
    throw std::invalid_argument("imitation_reward: reference foot count does not match model");

  const double s = w.imitation_scale;
  const double dt = w.dt;
  RewardBreakdown r;

  r.im_joint_angles =
      s * w.im_joint_angles * dt * phi((ref.q - curr.q).squaredNorm(), w.sigma_joint_angles);

  double ee_sq = 0.0;
  double fz_sq = 0.0;
  for (int i = 0; i < nf; ++i) {
    ee_sq += (Eigen::Vector2d(ref.ee_xz[2 * i], ref.ee_xz[2 * i + 1]) - fk.ee_body[i]).squaredNorm();
    const double dz = ref.foot_z[i] - fk.foot_world[i].y();
    fz_sq += dz * dz;
  }
  r.im_ee_position = s * w.im_ee_position * dt * phi(ee_sq, w.sigma_ee_position);
  r.im_foot_height = s * w.im_foot_height * dt * phi(fz_sq, w.sigma_foot_height);

  r.im_base_height = -s * w.im_base_height * dt * std::abs(ref.base_height - curr.base_pos.y());

  return r;
}

Command sample_command(Rng& rng, const CommandRanges& ranges) {
  Command cmd;
  cmd.v_cmd = rng.uniform(ranges.v_lo, ranges.v_hi);
  cmd.w_cmd = rng.uniform(ranges.w_lo, ranges.w_hi);
  return cmd;
}

const char* to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::none: return "none";
    case TerminationReason::base_contact: return "base_contact";
    case TerminationReason::orientation: return "orientation";
    case TerminationReason::timeout: return "timeout";
  }
  return "none";
}

std::pair<bool, TerminationReason> terminate(const SimState& state, const ContactReport& contact,
                                             int episode_step, const TerminationConfig& cfg) {
  if (!contact.body_collision.empty() && contact.body_collision[0])
    return {true, TerminationReason::base_contact};
  if (std::abs(state.base_pitch) > cfg.pitch_limit) return {true, TerminationReason::orientation};
  if (episode_step >= cfg.max_steps) return {true, TerminationReason::timeout};
  return {false, TerminationReason::none};
}

}  // namespace decap
