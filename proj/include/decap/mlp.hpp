#pragma once

#include <Eigen/Core>
#include <vector>

#include "decap/rng.hpp"

namespace decap {

// Fully connected net, tanh hidden layers, linear output. Columns are batch
// samples throughout, so forward/backward are plain GEMMs.
struct Mlp {
  std::vector<Eigen::MatrixXd> W;  // W[l] is (out_l x in_l)
  std::vector<Eigen::VectorXd> b;

  int input_size() const { return W.empty() ? 0 : static_cast<int>(W.front().cols()); }
  int output_size() const { return W.empty() ? 0 : static_cast<int>(W.back().rows()); }
  int n_layers() const { return static_cast<int>(W.size()); }
};

// Xavier-uniform weights; the output layer is scaled by out_gain (small values
// keep the initial policy close to zero action).
Mlp make_mlp(int in, const std::vector<int>& hidden, int out, Rng& rng, double out_gain = 1.0);

// Post-activation values per layer; acts[0] is the input batch.
struct MlpCache {
  std::vector<Eigen::MatrixXd> acts;
};

Eigen::MatrixXd mlp_forward(const Mlp& net, const Eigen::MatrixXd& x);
Eigen::MatrixXd mlp_forward(const Mlp& net, const Eigen::MatrixXd& x, MlpCache& cache);

struct MlpGrads {
  std::vector<Eigen::MatrixXd> dW;
  std::vector<Eigen::VectorXd> db;

  void zero_like(const Mlp& net);
  double squared_norm() const;
  void scale(double s);
};

// dy is dLoss/dOutput (out x batch); returns dLoss/dInput and accumulates
// parameter gradients.
Eigen::MatrixXd mlp_backward(const Mlp& net, const MlpCache& cache, const Eigen::MatrixXd& dy,
                             MlpGrads& grads);

struct AdamState {
  std::vector<Eigen::MatrixXd> mW, vW;
  std::vector<Eigen::VectorXd> mb, vb;
  Eigen::VectorXd m_extra, v_extra;  // moments for a flat extra vector (log_std)
  std::int64_t t = 0;

  void init_like(const Mlp& net, int extra_size);
};

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One Adam step over the net parameters; `extra`/`d_extra` update a flat
// vector that shares the step counter (used for the policy log_std).
void adam_step(Mlp& net, const MlpGrads& grads, Eigen::VectorXd* extra,
               const Eigen::VectorXd* d_extra, AdamState& state, const AdamConfig& cfg);

}  // namespace decap
