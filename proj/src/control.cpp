#include "decap/control.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "decap/errors.hpp"

namespace decap {

double decay_factor(const DecaySchedule& s, std::int64_t t) {
  if (t < 0) throw std::invalid_argument("decay_factor: t must be >= 0");
  // exp((t/k) ln gamma) rather than pow(): one branch cut, monotone in t.
  return std::exp(static_cast<double>(t) / s.k * std::log(s.gamma));
}

Eigen::VectorXd pd_torque(const Eigen::VectorXd& q_des, const Eigen::VectorXd& q,
                          const Eigen::VectorXd& qdot, const Gains& gains) {
  if (q_des.size() != q.size() || qdot.size() != q.size())
    throw std::invalid_argument("pd_torque: dimension mismatch");
  return gains.kp * (q_des - q) - gains.kd * qdot;
}

ActionMode action_mode_from_string(const std::string& s) {
  if (s == "position") return ActionMode::position;
  if (s == "torque") return ActionMode::torque;
  if (s == "decap") return ActionMode::decap;
  if (s == "assisted") return ActionMode::assisted;
  throw ConfigError("unknown action mode '" + s + "'");
}

const char* to_string(ActionMode m) {
  switch (m) {
    case ActionMode::position: return "position";
    case ActionMode::torque: return "torque";
    case ActionMode::decap: return "decap";
    case ActionMode::assisted: return "assisted";
  }
  return "position";
}

DecayClock decay_clock_from_string(const std::string& s) {
  if (s == "global") return DecayClock::global;
  if (s == "episode") return DecayClock::episode;
  throw ConfigError("unknown decay clock '" + s + "'");
}

const char* to_string(DecayClock c) {
  return c == DecayClock::global ? "global" : "episode";
}

ActionResult apply_action(const Eigen::VectorXd& raw, const SimState& state,
                          const Eigen::VectorXd* q_ref, const ActionConfig& cfg,
                          const RobotModel& model, std::int64_t t) {
  const int n = model.n_joints();
  if (raw.size() != n) throw std::invalid_argument("apply_action: action size mismatch");

  ActionResult out;
  out.q_des = Eigen::VectorXd::Zero(n);

  switch (cfg.mode) {
    case ActionMode::position: {
      out.q_des = model.q_nom + cfg.action_scale_position * raw;
      out.torques_unclamped = pd_torque(out.q_des, state.q, state.qdot, cfg.gains);
      break;
    }
    case ActionMode::torque: {
      out.torques_unclamped = cfg.action_scale_torque * raw;
      break;
    }
    case ActionMode::decap: {
      if (q_ref == nullptr || q_ref->size() != n)
        throw std::invalid_argument("apply_action: decap mode needs a reference target");
      out.q_des = *q_ref;
      const Eigen::VectorXd prior = pd_torque(out.q_des, state.q, state.qdot, cfg.gains);
      out.torques_unclamped = cfg.action_scale_torque * raw + decay_factor(cfg.decay, t) * prior;
      break;
    }
    case ActionMode::assisted: {
      if (q_ref == nullptr || q_ref->size() != n)
        throw std::invalid_argument("apply_action: assisted mode needs a reference target");
      out.q_des = *q_ref;
      out.torques_unclamped = cfg.action_scale_torque * raw +
                              pd_torque(out.q_des, state.q, state.qdot, cfg.assist_gains);
      break;
    }
  }

  out.torques = out.torques_unclamped;
  for (int i = 0; i < n; ++i)
    out.torques[i] = std::clamp(out.torques[i], -model.torque_limits[i], model.torque_limits[i]);
  return out;
}

}  // namespace decap
