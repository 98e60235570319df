#include "decap/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "decap/errors.hpp"
#include "decap/ppo.hpp"

namespace decap {

Env::Env(const RobotModel* model, const EnvConfig& env_cfg, const ActionConfig& action_cfg,
         const RewardWeights& weights, bool use_imitation_rewards, std::uint64_t seed)
    : model_(model),
      env_cfg_(env_cfg),
      action_cfg_(action_cfg),
      weights_(weights),
      use_imitation_rewards_(use_imitation_rewards),
      rng_(seed) {
  if (model_ == nullptr) throw std::invalid_argument("Env: null model");
  weights_.dt = env_cfg_.dt;
  reset(false);
}

void Env::reset(bool randomize) {
  const int n = model_->n_joints();
  state_ = default_state(*model_);
  if (randomize) {
    for (int i = 0; i < n; ++i) {
      state_.q[i] += rng_.uniform(-env_cfg_.init_q_noise, env_cfg_.init_q_noise);
      state_.q[i] = std::clamp(state_.q[i], model_->joint_lower[i], model_->joint_upper[i]);
      state_.qdot[i] += rng_.uniform(-env_cfg_.init_qdot_noise, env_cfg_.init_qdot_noise);
    }
  }
  cmd_ = sample_command(rng_, env_cfg_.commands);
  a_prev_ = Eigen::VectorXd::Zero(n);
  torques_ = Eigen::VectorXd::Zero(n);
  q_des_ = Eigen::VectorXd::Zero(n);
  ep_step_ = 0;
  refresh_observation();
}

void Env::set_command(const Command& cmd) {
  cmd_ = cmd;
  refresh_observation();
}

FkResult Env::fk() const {
  return forward_kinematics(state_.q, state_.base_pos, state_.base_pitch, *model_);
}

void Env::refresh_observation() { obs_ = observe(state_, cmd_, a_prev_).flatten(); }

EnvStepResult Env::step(const Eigen::VectorXd& raw_action, std::int64_t decay_t) {
  const int n = model_->n_joints();
  if (raw_action.size() != n) throw std::invalid_argument("Env::step: action size mismatch");
  if (!raw_action.allFinite()) throw std::invalid_argument("Env::step: non-finite action");

  const ImitationFrame* ref = nullptr;
  Eigen::VectorXd q_ref;
  const Eigen::VectorXd* q_ref_ptr = nullptr;
  if (action_cfg_.mode == ActionMode::decap || use_imitation_rewards_) {
    if (dataset_ == nullptr) throw std::logic_error("Env::step: imitation dataset not set");
    if (std::abs(dataset_->dt - env_cfg_.dt) > 1e-12)
      throw RuntimeFailure("Env::step: dataset dt " + std::to_string(dataset_->dt) +
                           " does not match env dt " + std::to_string(env_cfg_.dt));
    ref = &lookup(*dataset_, cmd_, ep_step_);
  }
  if (action_cfg_.mode == ActionMode::decap) {
    q_ref = ref->q;
    q_ref_ptr = &q_ref;
  } else if (action_cfg_.mode == ActionMode::assisted) {
    if (assist_ == nullptr) throw std::logic_error("Env::step: assist policy not set");
    const Eigen::VectorXd a_pos = act_mean(*assist_, obs_);
    q_ref = model_->q_nom + action_cfg_.action_scale_position * a_pos;
    q_ref_ptr = &q_ref;
  }

  const ActionResult act = apply_action(raw_action, state_, q_ref_ptr, action_cfg_, *model_,
                                        decay_t);
  auto [next, contact] = decap::step(state_, act.torques, *model_, env_cfg_.dt);

  EnvStepResult out;
  if (!next.finite()) {
    out.done = true;
    out.fault = true;
    out.reason = TerminationReason::none;
    return out;
  }

  out.breakdown = shaping_reward(state_, next, act.torques, contact, cmd_, a_prev_, raw_action,
                                 weights_);
  if (use_imitation_rewards_) {
    const FkResult fk_next =
        forward_kinematics(next.q, next.base_pos, next.base_pitch, *model_);
    out.breakdown += imitation_reward(next, *ref, fk_next, weights_);
  }
  out.reward = out.breakdown.total();

  state_ = next;
  torques_ = act.torques;
  q_des_ = act.q_des;
  a_prev_ = raw_action;
  ep_step_ += 1;
  refresh_observation();

  auto [done, reason] = terminate(state_, contact, ep_step_, env_cfg_.termination);
  out.done = done;
  out.reason = reason;
  return out;
}

}  // namespace decap
