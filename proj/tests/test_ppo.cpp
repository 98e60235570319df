#include <doctest.h>

#include <cmath>
#include <limits>

#include "decap/ppo.hpp"

using namespace decap;

namespace {

// O(n^2) reference: advantage at t is the discounted sum of one-step TD
// residuals, cut at episode boundaries.
GaeResult gae_brute_force(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                          const std::vector<bool>& dones, double last_value, double gamma,
                          double lam) {
  const int n = static_cast<int>(rewards.size());
  GaeResult out;
  out.advantages = Eigen::VectorXd::Zero(n);
  out.returns = Eigen::VectorXd::Zero(n);
  for (int t = 0; t < n; ++t) {
    double acc = 0.0, w = 1.0;
    for (int l = t; l < n; ++l) {
      const double next_v = dones[l] ? 0.0 : (l + 1 < n ? values[l + 1] : last_value);
      const double delta = rewards[l] + gamma * next_v - values[l];
      acc += w * delta;
      if (dones[l]) break;
      w *= gamma * lam;
    }
    out.advantages[t] = acc;
    out.returns[t] = acc + values[t];
  }
  return out;
}

RolloutBatch toy_batch(int obs_dim, int act_dim, int n, const PolicyParameters& p, Rng& rng) {
  RolloutBatch b;
  b.obs = Eigen::MatrixXd(obs_dim, n);
  for (int i = 0; i < b.obs.size(); ++i) b.obs.data()[i] = rng.normal();
  b.actions = Eigen::MatrixXd(act_dim, n);
  b.log_probs = Eigen::VectorXd(n);
  for (int c = 0; c < n; ++c) {
    const Eigen::VectorXd mean = act_mean(p, Eigen::VectorXd(b.obs.col(c)));
    Eigen::VectorXd a(act_dim);
    for (int r = 0; r < act_dim; ++r)
      a[r] = mean[r] + std::exp(p.log_std[r]) * rng.normal();
    b.actions.col(c) = a;
    b.log_probs[c] = gaussian_log_prob(a, mean, p.log_std);
  }
  b.advantages = Eigen::VectorXd(n);
  for (int i = 0; i < n; ++i) b.advantages[i] = rng.normal();
  const double mu = b.advantages.mean();
  const double sd = std::sqrt((b.advantages.array() - mu).square().sum() / n);
  b.advantages = ((b.advantages.array() - mu) / (sd + 1e-8)).matrix();
  b.returns = Eigen::VectorXd(n);
  for (int i = 0; i < n; ++i) b.returns[i] = rng.normal();
  return b;
}

PolicyParameters toy_policy(int obs_dim, int act_dim, std::uint64_t seed) {
  Rng rng(seed);
  return make_policy(obs_dim, act_dim, {8, 8}, -0.5, Eigen::VectorXd::Zero(obs_dim),
                     Eigen::VectorXd::Ones(obs_dim), rng);
}

double params_delta(const PolicyParameters& a, const PolicyParameters& b) {
  double d = 0.0;
  for (int l = 0; l < a.actor.n_layers(); ++l) {
    d = std::max(d, (a.actor.W[l] - b.actor.W[l]).cwiseAbs().maxCoeff());
    d = std::max(d, (a.actor.b[l] - b.actor.b[l]).cwiseAbs().maxCoeff());
  }
  for (int l = 0; l < a.critic.n_layers(); ++l) {
    d = std::max(d, (a.critic.W[l] - b.critic.W[l]).cwiseAbs().maxCoeff());
    d = std::max(d, (a.critic.b[l] - b.critic.b[l]).cwiseAbs().maxCoeff());
  }
  d = std::max(d, (a.log_std - b.log_std).cwiseAbs().maxCoeff());
  return d;
}

}  // namespace

TEST_CASE("gae matches the brute-force reference on random trajectories") {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_index(64));
    Eigen::VectorXd rewards(n), values(n);
    std::vector<bool> dones(n, false);
    for (int i = 0; i < n; ++i) {
      rewards[i] = rng.normal();
      values[i] = rng.normal();
      dones[i] = rng.uniform(0.0, 1.0) < 0.15;
    }
    const double last_value = rng.normal();
    const double gamma = rng.uniform(0.9, 0.999);
    const double lam = rng.uniform(0.0, 1.0);

    const GaeResult fast = gae(rewards, values, dones, last_value, gamma, lam);
    const GaeResult slow = gae_brute_force(rewards, values, dones, last_value, gamma, lam);
    CHECK((fast.advantages - slow.advantages).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((fast.returns - slow.returns).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("gae limit cases collapse to TD(0) and Monte Carlo") {
  Eigen::VectorXd rewards(3), values(3);
  rewards << 1.0, 2.0, 3.0;
  values << 0.5, 0.25, 0.125;
  std::vector<bool> dones = {false, false, true};
  const double gamma = 0.9;

  SUBCASE("lambda = 0 gives one-step TD residuals") {
    const GaeResult g = gae(rewards, values, dones, 7.0, gamma, 0.0);
    CHECK(g.advantages[0] == doctest::Approx(1.0 + gamma * 0.25 - 0.5).epsilon(1e-12));
    CHECK(g.advantages[1] == doctest::Approx(2.0 + gamma * 0.125 - 0.25).epsilon(1e-12));
    CHECK(g.advantages[2] == doctest::Approx(3.0 - 0.125).epsilon(1e-12));
  }
  SUBCASE("lambda = 1 gives discounted returns minus the baseline") {
    const GaeResult g = gae(rewards, values, dones, 7.0, gamma, 1.0);
    const double ret0 = 1.0 + gamma * (2.0 + gamma * 3.0);
    CHECK(g.advantages[0] == doctest::Approx(ret0 - 0.5).epsilon(1e-12));
    CHECK(g.returns[0] == doctest::Approx(ret0).epsilon(1e-12));
  }
  SUBCASE("the bootstrap value only enters when the tail is unfinished") {
    std::vector<bool> open = {false, false, false};
    const GaeResult g = gae(rewards, values, open, 7.0, gamma, 1.0);
    const double ret0 = 1.0 + gamma * (2.0 + gamma * (3.0 + gamma * 7.0));
    CHECK(g.returns[0] == doctest::Approx(ret0).epsilon(1e-12));
  }
}

TEST_CASE("gaussian log prob matches the closed form") {
  Eigen::VectorXd a(2), mean(2), log_std(2);
  a << 1.0, -1.0;
  mean << 0.0, 0.0;
  log_std << 0.0, std::log(2.0);
  const double expect = -0.5 * (1.0 + 0.25) - std::log(2.0) - std::log(2.0 * M_PI);
  CHECK(gaussian_log_prob(a, mean, log_std) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("a single full-batch epoch has inactive clipping") {
  // With epochs = minibatches = 1 every ratio is exactly 1, so the clip
  // bound cannot engage no matter how tight it is.
  Rng data_rng(5);
  PolicyParameters p1 = toy_policy(6, 2, 77);
  PolicyParameters p2 = p1;
  const RolloutBatch batch = toy_batch(6, 2, 32, p1, data_rng);

  PpoConfig tight, loose;
  tight.epochs = loose.epochs = 1;
  tight.minibatches = loose.minibatches = 1;
  tight.clip_ratio = 1e-9;
  loose.clip_ratio = 100.0;

  PpoOptimizer o1, o2;
  o1.init(p1);
  o2.init(p2);
  Rng r1(3), r2(3);
  const UpdateStats s1 = ppo_update(p1, o1, batch, tight, r1);
  const UpdateStats s2 = ppo_update(p2, o2, batch, loose, r2);

  CHECK(s1.clip_fraction == 0.0);
  CHECK(s2.clip_fraction == 0.0);
  CHECK(params_delta(p1, p2) < 1e-14);
}

TEST_CASE("zero advantages leave the actor untouched") {
  Rng data_rng(6);
  PolicyParameters p = toy_policy(5, 2, 78);
  const PolicyParameters before = p;
  RolloutBatch batch = toy_batch(5, 2, 24, p, data_rng);
  batch.advantages.setZero();

  PpoConfig cfg;
  cfg.entropy_coef = 0.0;
  cfg.epochs = 2;
  PpoOptimizer opt;
  opt.init(p);
  Rng rng(4);
  ppo_update(p, opt, batch, cfg, rng);

  for (int l = 0; l < p.actor.n_layers(); ++l) {
    CHECK((p.actor.W[l] - before.actor.W[l]).norm() == 0.0);
  }
  CHECK((p.log_std - before.log_std).norm() == 0.0);
  // the critic still regresses toward the returns
  CHECK(params_delta(p, before) > 0.0);
}

TEST_CASE("updates are deterministic given identical inputs and seeds") {
  Rng data_rng(8);
  PolicyParameters p1 = toy_policy(6, 3, 79);
  PolicyParameters p2 = p1;
  const RolloutBatch batch = toy_batch(6, 3, 40, p1, data_rng);
  PpoConfig cfg;
  PpoOptimizer o1, o2;
  o1.init(p1);
  o2.init(p2);
  Rng r1(12), r2(12);
  const UpdateStats s1 = ppo_update(p1, o1, batch, cfg, r1);
  const UpdateStats s2 = ppo_update(p2, o2, batch, cfg, r2);
  CHECK(params_delta(p1, p2) == 0.0);
  CHECK(s1.policy_loss == s2.policy_loss);
  CHECK(s1.approx_kl == s2.approx_kl);
}

TEST_CASE("non-finite losses abort the update and restore the snapshot") {
  Rng data_rng(9);
  PolicyParameters p = toy_policy(4, 2, 80);
  const PolicyParameters before = p;
  RolloutBatch batch = toy_batch(4, 2, 16, p, data_rng);
  batch.returns[3] = std::numeric_limits<double>::quiet_NaN();

  PpoConfig cfg;
  PpoOptimizer opt;
  opt.init(p);
  Rng rng(2);
  const UpdateStats stats = ppo_update(p, opt, batch, cfg, rng);
  CHECK(stats.aborted);
  CHECK(params_delta(p, before) == 0.0);
}

TEST_CASE("gradient norms respect the clip ceiling") {
  Rng data_rng(10);
  PolicyParameters p = toy_policy(5, 2, 81);
  RolloutBatch batch = toy_batch(5, 2, 32, p, data_rng);
  batch.advantages *= 1000.0;  // force a huge surrogate gradient

  PpoConfig cfg;
  cfg.max_grad_norm = 0.5;
  cfg.epochs = 1;
  cfg.minibatches = 1;
  PpoOptimizer opt;
  opt.init(p);
  Rng rng(2);
  const UpdateStats stats = ppo_update(p, opt, batch, cfg, rng);
  CHECK_FALSE(stats.aborted);
  CHECK(stats.grad_norm > 0.5);  // reported pre-clip norm
}
