#include "decap/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace decap {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;
}

PolicyParameters make_policy(int obs_size, int act_size, const std::vector<int>& hidden,
                             double init_log_std, const Eigen::VectorXd& obs_shift,
                             const Eigen::VectorXd& obs_scale, Rng& rng) {
  if (obs_shift.size() != obs_size || obs_scale.size() != obs_size)
    throw std::invalid_argument("make_policy: normalization size mismatch");
  PolicyParameters p;
  p.actor = make_mlp(obs_size, hidden, act_size, rng, 0.01);
  p.critic = make_mlp(obs_size, hidden, 1, rng, 1.0);
  p.log_std = Eigen::VectorXd::Constant(act_size, init_log_std);
  p.obs_shift = obs_shift;
  p.obs_scale = obs_scale;
  return p;
}

Eigen::MatrixXd normalize_obs(const PolicyParameters& p, const Eigen::MatrixXd& obs) {
  if (obs.rows() != p.obs_shift.size())
    throw std::invalid_argument("normalize_obs: observation size mismatch");
  return (obs.colwise() - p.obs_shift).array().colwise() * p.obs_scale.array();
}

Eigen::VectorXd act_mean(const PolicyParameters& p, const Eigen::VectorXd& obs) {
  return mlp_forward(p.actor, normalize_obs(p, obs)).col(0);
}

Eigen::MatrixXd act_mean(const PolicyParameters& p, const Eigen::MatrixXd& obs) {
  return mlp_forward(p.actor, normalize_obs(p, obs));
}

SampledAction act_sample(const PolicyParameters& p, const Eigen::VectorXd& obs, Rng& rng) {
  const Eigen::VectorXd mean = act_mean(p, obs);
  SampledAction out;
  out.action = mean;
  for (int i = 0; i < mean.size(); ++i)
    out.action[i] += std::exp(p.log_std[i]) * rng.normal();
  out.log_prob = gaussian_log_prob(out.action, mean, p.log_std);
  return out;
}

double state_value(const PolicyParameters& p, const Eigen::VectorXd& obs) {
  return mlp_forward(p.critic, normalize_obs(p, obs))(0, 0);
}

Eigen::VectorXd state_value(const PolicyParameters& p, const Eigen::MatrixXd& obs) {
  return mlp_forward(p.critic, normalize_obs(p, obs)).row(0).transpose();
}

double gaussian_log_prob(const Eigen::VectorXd& action, const Eigen::VectorXd& mean,
                         const Eigen::VectorXd& log_std) {
  if (action.size() != mean.size() || mean.size() != log_std.size())
    throw std::invalid_argument("gaussian_log_prob: dimension mismatch");
  double lp = -0.5 * static_cast<double>(action.size()) * kLog2Pi;
  for (int i = 0; i < action.size(); ++i) {
    const double z = (action[i] - mean[i]) * std::exp(-log_std[i]);
    lp += -0.5 * z * z - log_std[i];
  }
  return lp;
}

GaeResult gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
              const std::vector<bool>& dones, double last_value, double gamma, double lam) {
  const auto n = rewards.size();
  if (values.size() != n || static_cast<Eigen::Index>(dones.size()) != n)
    throw std::invalid_argument("gae: input length mismatch");
  GaeResult out;
  out.advantages = Eigen::VectorXd::Zero(n);
  out.returns = Eigen::VectorXd::Zero(n);
  double running = 0.0;
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    const double not_done = dones[t] ? 0.0 : 1.0;
    const double next_value = (t + 1 < n) ? values[t + 1] : last_value;
    const double delta = rewards[t] + gamma * next_value * not_done - values[t];
    running = delta + gamma * lam * not_done * running;
    out.advantages[t] = running;
    out.returns[t] = running + values[t];
  }
  return out;
}

void PpoOptimizer::init(const PolicyParameters& p) {
  actor_state.init_like(p.actor, static_cast<int>(p.log_std.size()));
  critic_state.init_like(p.critic, 0);
}

UpdateStats ppo_update(PolicyParameters& p, PpoOptimizer& opt, const RolloutBatch& batch,
                       const PpoConfig& cfg, Rng& rng) {
  const auto n_total = batch.size();
  if (n_total <= 0) throw std::invalid_argument("ppo_update: empty batch");
  if (batch.obs.rows() != p.obs_size() || batch.actions.rows() != p.act_size())
    throw std::invalid_argument("ppo_update: batch shape mismatch");

  const PolicyParameters snapshot = p;
  const PpoOptimizer opt_snapshot = opt;

  const int act_dim = p.act_size();
  const Eigen::MatrixXd obs_norm = normalize_obs(p, batch.obs);

  std::vector<std::size_t> order(static_cast<std::size_t>(n_total));
  std::iota(order.begin(), order.end(), std::size_t{0});

  UpdateStats stats;
  int n_updates = 0;

  const int n_mb = std::max(1, std::min<int>(cfg.minibatches, static_cast<int>(n_total)));
  MlpGrads actor_g, critic_g;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (int mb = 0; mb < n_mb; ++mb) {
      const auto lo = static_cast<Eigen::Index>(mb) * n_total / n_mb;
      const auto hi = static_cast<Eigen::Index>(mb + 1) * n_total / n_mb;
      const auto m = hi - lo;
      if (m <= 0) continue;

      Eigen::MatrixXd x(obs_norm.rows(), m);
      Eigen::MatrixXd acts(act_dim, m);
      Eigen::VectorXd adv(m), ret(m), lp_old(m);
      for (Eigen::Index j = 0; j < m; ++j) {
        const auto src = static_cast<Eigen::Index>(order[static_cast<std::size_t>(lo + j)]);
        x.col(j) = obs_norm.col(src);
        acts.col(j) = batch.actions.col(src);
        adv[j] = batch.advantages[src];
        ret[j] = batch.returns[src];
        lp_old[j] = batch.log_probs[src];
      }

      MlpCache actor_cache, critic_cache;
      const Eigen::MatrixXd mean = mlp_forward(p.actor, x, actor_cache);
      const Eigen::VectorXd v = mlp_forward(p.critic, x, critic_cache).row(0).transpose();

      const Eigen::ArrayXd inv_std = (-p.log_std.array()).exp();
      const Eigen::MatrixXd z = ((acts - mean).array().colwise() * inv_std).matrix();
      const Eigen::ArrayXd z_sq = z.array().square().colwise().sum().transpose();
      const Eigen::VectorXd lp_new =
          (-0.5 * z_sq - 0.5 * act_dim * kLog2Pi - p.log_std.sum()).matrix();

      const Eigen::ArrayXd log_ratio = (lp_new - lp_old).array();
      const Eigen::ArrayXd ratio = log_ratio.exp();

      double policy_loss = 0.0;
      double clip_count = 0.0;
      Eigen::VectorXd dlp = Eigen::VectorXd::Zero(m);  // dL_pi / dlp_new per sample
      for (Eigen::Index j = 0; j < m; ++j) {
        const double r = ratio[j];
        const double a = adv[j];
        const double clipped = std::clamp(r, 1.0 - cfg.clip_ratio, 1.0 + cfg.clip_ratio) * a;
        policy_loss -= std::min(r * a, clipped) / static_cast<double>(m);
        const bool gated = (a > 0.0 && r > 1.0 + cfg.clip_ratio) ||
                           (a < 0.0 && r < 1.0 - cfg.clip_ratio);
        if (!gated) dlp[j] = -r * a / static_cast<double>(m);
        if (std::abs(r - 1.0) > cfg.clip_ratio) clip_count += 1.0;
      }

      const Eigen::VectorXd v_err = v - ret;
      const double value_loss = v_err.squaredNorm() / static_cast<double>(m);
      const double entropy =
          p.log_std.sum() + 0.5 * act_dim * (1.0 + kLog2Pi);
      const double total_loss = policy_loss + cfg.value_coef * value_loss - cfg.entropy_coef * entropy;

      if (!std::isfinite(total_loss)) {
        p = snapshot;
        opt = opt_snapshot;
        stats.aborted = true;
        return stats;
      }

      // lp = -1/2 sum_i ((a_i - mean_i) * inv_std_i)^2 + ...  so
      // d lp / d mean_ij = z_ij * inv_std_i; chain with the per-sample dlp.
      Eigen::MatrixXd dmean = (z.array().colwise() * inv_std).matrix();
      for (Eigen::Index j = 0; j < m; ++j) dmean.col(j) *= dlp[j];

      Eigen::VectorXd dlog_std = Eigen::VectorXd::Zero(act_dim);
      for (int i = 0; i < act_dim; ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) s += dlp[j] * (z(i, j) * z(i, j) - 1.0);
        dlog_std[i] = s - cfg.entropy_coef;
      }

      Eigen::MatrixXd dv = (2.0 * cfg.value_coef / static_cast<double>(m)) * v_err.transpose();

      actor_g.zero_like(p.actor);
      critic_g.zero_like(p.critic);
      mlp_backward(p.actor, actor_cache, dmean, actor_g);
      mlp_backward(p.critic, critic_cache, dv, critic_g);

      const double g_norm = std::sqrt(actor_g.squared_norm() + critic_g.squared_norm() +
                                      dlog_std.squaredNorm());
      if (!std::isfinite(g_norm)) {
        p = snapshot;
        opt = opt_snapshot;
        stats.aborted = true;
        return stats;
      }
      if (g_norm > cfg.max_grad_norm && g_norm > 0.0) {
        const double s = cfg.max_grad_norm / g_norm;
        actor_g.scale(s);
        critic_g.scale(s);
        dlog_std *= s;
      }

      adam_step(p.actor, actor_g, &p.log_std, &dlog_std, opt.actor_state, cfg.adam);
      adam_step(p.critic, critic_g, nullptr, nullptr, opt.critic_state, cfg.adam);

      stats.policy_loss += policy_loss;
      stats.value_loss += value_loss;
      stats.entropy += entropy;
      stats.approx_kl += (ratio - 1.0 - log_ratio).mean();
      stats.clip_fraction += clip_count / static_cast<double>(m);
      stats.grad_norm = g_norm;
      n_updates += 1;
    }
  }

  if (n_updates > 0) {
    stats.policy_loss /= n_updates;
    stats.value_loss /= n_updates;
    stats.entropy /= n_updates;
    stats.approx_kl /= n_updates;
    stats.clip_fraction /= n_updates;
  }
  return stats;
}

}  // namespace decap
