#include "decap/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace decap {

Mlp make_mlp(int in, const std::vector<int>& hidden, int out, Rng& rng, double out_gain) {
  if (in <= 0 || out <= 0) throw std::invalid_argument("make_mlp: sizes must be positive");
  std::vector<int> dims;
  dims.push_back(in);
  for (int h : hidden) {
    if (h <= 0) throw std::invalid_argument("make_mlp: hidden sizes must be positive");
    dims.push_back(h);
  }
  dims.push_back(out);

  Mlp net;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    const bool last = (l + 2 == dims.size());
    const double limit = std::sqrt(6.0 / (fan_in + fan_out)) * (last ? out_gain : 1.0);
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int i = 0; i < fan_out; ++i)
      for (int j = 0; j < fan_in; ++j) w(i, j) = rng.uniform(-limit, limit);
    net.W.push_back(std::move(w));
    net.b.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return net;
}

Eigen::MatrixXd mlp_forward(const Mlp& net, const Eigen::MatrixXd& x) {
  MlpCache cache;
  return mlp_forward(net, x, cache);
}

Eigen::MatrixXd mlp_forward(const Mlp& net, const Eigen::MatrixXd& x, MlpCache& cache) {
  if (x.rows() != net.input_size()) throw std::invalid_argument("mlp_forward: input size mismatch");
  cache.acts.clear();
  cache.acts.reserve(net.W.size() + 1);
  cache.acts.push_back(x);
  Eigen::MatrixXd a = x;
  for (int l = 0; l < net.n_layers(); ++l) {
    Eigen::MatrixXd z = (net.W[l] * a).colwise() + net.b[l];
    if (l + 1 < net.n_layers()) z = z.array().tanh();
    cache.acts.push_back(z);
    a = std::move(z);
  }
  return a;
}

void MlpGrads::zero_like(const Mlp& net) {
  dW.clear();
  db.clear();
  for (int l = 0; l < net.n_layers(); ++l) {
    dW.push_back(Eigen::MatrixXd::Zero(net.W[l].rows(), net.W[l].cols()));
    db.push_back(Eigen::VectorXd::Zero(net.b[l].size()));
  }
}

double MlpGrads::squared_norm() const {
  double s = 0.0;
  for (const auto& g : dW) s += g.squaredNorm();
  for (const auto& g : db) s += g.squaredNorm();
  return s;
}

void MlpGrads::scale(double s) {
  for (auto& g : dW) g *= s;
  for (auto& g : db) g *= s;
}

Eigen::MatrixXd mlp_backward(const Mlp& net, const MlpCache& cache, const Eigen::MatrixXd& dy,
                             MlpGrads& grads) {
  if (static_cast<int>(cache.acts.size()) != net.n_layers() + 1)
    throw std::invalid_argument("mlp_backward: cache does not match net");
  Eigen::MatrixXd dz = dy;
  for (int l = net.n_layers() - 1; l >= 0; --l) {
    // cache.acts[l+1] is post-activation for hidden layers, raw for the last.
    if (l != net.n_layers() - 1)
      dz = dz.array() * (1.0 - cache.acts[l + 1].array().square());
    grads.dW[l] += dz * cache.acts[l].transpose();
    grads.db[l] += dz.rowwise().sum();
    if (l > 0) dz = net.W[l].transpose() * dz;
  }
  return net.W[0].transpose() * dz;
}

void AdamState::init_like(const Mlp& net, int extra_size) {
  mW.clear();
  vW.clear();
  mb.clear();
  vb.clear();
  for (int l = 0; l < net.n_layers(); ++l) {
    mW.push_back(Eigen::MatrixXd::Zero(net.W[l].rows(), net.W[l].cols()));
    vW.push_back(Eigen::MatrixXd::Zero(net.W[l].rows(), net.W[l].cols()));
    mb.push_back(Eigen::VectorXd::Zero(net.b[l].size()));
    vb.push_back(Eigen::VectorXd::Zero(net.b[l].size()));
  }
  m_extra = Eigen::VectorXd::Zero(extra_size);
  v_extra = Eigen::VectorXd::Zero(extra_size);
  t = 0;
}

namespace {
template <class Mat>
void adam_apply(Mat& p, const Mat& g, Mat& m, Mat& v, double lr_hat, double beta1, double beta2,
                double eps) {
  m = beta1 * m + (1.0 - beta1) * g;
  v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
  p.array() -= lr_hat * m.array() / (v.array().sqrt() + eps);
}
}  // namespace

void adam_step(Mlp& net, const MlpGrads& grads, Eigen::VectorXd* extra,
               const Eigen::VectorXd* d_extra, AdamState& state, const AdamConfig& cfg) {
  state.t += 1;
  const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  // Folding both bias corrections into the step size matches the update
  // p -= lr * (m/bias1) / (sqrt(v/bias2) + eps) up to an eps rescale.
  const double lr_hat = cfg.lr * std::sqrt(bias2) / bias1;
  for (int l = 0; l < net.n_layers(); ++l) {
    adam_apply(net.W[l], grads.dW[l], state.mW[l], state.vW[l], lr_hat, cfg.beta1, cfg.beta2,
               cfg.eps);
    adam_apply(net.b[l], grads.db[l], state.mb[l], state.vb[l], lr_hat, cfg.beta1, cfg.beta2,
               cfg.eps);
  }
  if (extra != nullptr && d_extra != nullptr && extra->size() > 0)
    adam_apply(*extra, *d_extra, state.m_extra, state.v_extra, lr_hat, cfg.beta1, cfg.beta2,
               cfg.eps);
}

}  // namespace decap
