#include <doctest.h>

#include <cmath>

#include "decap/mlp.hpp"

using namespace decap;

TEST_CASE("make_mlp produces the requested shapes with zero biases") {
  Rng rng(1);
  const Mlp net = make_mlp(5, {16, 8}, 3, rng);
  REQUIRE(net.n_layers() == 3);
  CHECK(net.W[0].rows() == 16);
  CHECK(net.W[0].cols() == 5);
  CHECK(net.W[1].rows() == 8);
  CHECK(net.W[2].rows() == 3);
  CHECK(net.input_size() == 5);
  CHECK(net.output_size() == 3);
  for (const auto& b : net.b) CHECK(b.isZero());
  // Xavier-uniform bound on the first layer
  const double limit = std::sqrt(6.0 / (5 + 16));
  CHECK(net.W[0].cwiseAbs().maxCoeff() <= limit);
  CHECK(net.W[0].cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("output gain scales only the last layer") {
  Rng a(9), b(9);
  const Mlp plain = make_mlp(4, {6}, 2, a, 1.0);
  const Mlp scaled = make_mlp(4, {6}, 2, b, 0.01);
  CHECK((plain.W[0] - scaled.W[0]).norm() == 0.0);
  CHECK((plain.W[1] * 0.01 - scaled.W[1]).norm() < 1e-15);
}

TEST_CASE("a single linear layer is exact") {
  Mlp net;
  net.W.push_back((Eigen::MatrixXd(2, 3) << 1, 2, 3, 4, 5, 6).finished());
  net.b.push_back((Eigen::VectorXd(2) << 0.5, -0.5).finished());
  Eigen::MatrixXd x(3, 2);
  x << 1, 0, 0, 1, 0, 0;
  const Eigen::MatrixXd y = mlp_forward(net, x);
  CHECK(y(0, 0) == doctest::Approx(1.5));
  CHECK(y(1, 0) == doctest::Approx(3.5));
  CHECK(y(0, 1) == doctest::Approx(2.5));
  CHECK(y(1, 1) == doctest::Approx(4.5));
}

TEST_CASE("hidden layers apply tanh") {
  Mlp net;
  net.W.push_back(Eigen::MatrixXd::Identity(1, 1) * 2.0);
  net.b.push_back(Eigen::VectorXd::Zero(1));
  net.W.push_back(Eigen::MatrixXd::Identity(1, 1));
  net.b.push_back(Eigen::VectorXd::Zero(1));
  Eigen::MatrixXd x(1, 1);
  x << 0.7;
  CHECK(mlp_forward(net, x)(0, 0) == doctest::Approx(std::tanh(1.4)).epsilon(1e-15));
}

TEST_CASE("backward gradients match central finite differences") {
  Rng rng(17);
  for (int trial = 0; trial < 3; ++trial) {
    Mlp net = make_mlp(3, {8, 6}, 2, rng);
    const int batch = 4;
    Eigen::MatrixXd x(3, batch);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    Eigen::MatrixXd target(2, batch);
    for (int i = 0; i < target.size(); ++i) target.data()[i] = rng.normal();

    auto loss = [&](const Mlp& n) {
      const Eigen::MatrixXd y = mlp_forward(n, x);
      return 0.5 * (y - target).squaredNorm();
    };

    MlpCache cache;
    const Eigen::MatrixXd y = mlp_forward(net, x, cache);
    MlpGrads grads;
    grads.zero_like(net);
    mlp_backward(net, cache, y - target, grads);

    const double h = 1e-6;
    double worst = 0.0;
    for (int l = 0; l < net.n_layers(); ++l) {
      for (int i = 0; i < net.W[l].size(); ++i) {
        double& p = net.W[l].data()[i];
        const double keep = p;
        p = keep + h;
        const double up = loss(net);
        p = keep - h;
        const double dn = loss(net);
        p = keep;
        const double fd = (up - dn) / (2.0 * h);
        const double an = grads.dW[l].data()[i];
        worst = std::max(worst, std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)}));
      }
      for (int i = 0; i < net.b[l].size(); ++i) {
        double& p = net.b[l].data()[i];
        const double keep = p;
        p = keep + h;
        const double up = loss(net);
        p = keep - h;
        const double dn = loss(net);
        p = keep;
        const double fd = (up - dn) / (2.0 * h);
        worst = std::max(worst,
                         std::abs(fd - grads.db[l].data()[i]) / std::max(1.0, std::abs(fd)));
      }
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("backward also returns the input gradient") {
  Rng rng(23);
  Mlp net = make_mlp(4, {5}, 3, rng);
  Eigen::MatrixXd x(4, 2);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  Eigen::MatrixXd target = Eigen::MatrixXd::Zero(3, 2);

  MlpCache cache;
  const Eigen::MatrixXd y = mlp_forward(net, x, cache);
  MlpGrads grads;
  grads.zero_like(net);
  const Eigen::MatrixXd dx = mlp_backward(net, cache, y - target, grads);

  auto loss = [&](const Eigen::MatrixXd& xx) {
    return 0.5 * (mlp_forward(net, xx) - target).squaredNorm();
  };
  const double h = 1e-6;
  for (int i = 0; i < x.size(); ++i) {
    Eigen::MatrixXd xp = x, xm = x;
    xp.data()[i] += h;
    xm.data()[i] -= h;
    const double fd = (loss(xp) - loss(xm)) / (2.0 * h);
    CHECK(std::abs(fd - dx.data()[i]) < 1e-5);
  }
}

TEST_CASE("adam step matches the reference formula on a toy parameter") {
  Mlp net;
  net.W.push_back(Eigen::MatrixXd::Constant(1, 1, 1.0));
  net.b.push_back(Eigen::VectorXd::Zero(1));
  AdamState st;
  st.init_like(net, 0);
  AdamConfig cfg;
  cfg.lr = 0.1;

  MlpGrads g;
  g.zero_like(net);
  g.dW[0](0, 0) = 2.0;

  adam_step(net, g, nullptr, nullptr, st, cfg);

  // Hand-rolled first Adam step with the bias correction folded into the
  // step size: p -= lr * sqrt(1-b2^t)/(1-b1^t) * m / (sqrt(v) + eps), raw
  // first/second moments m = (1-b1) g, v = (1-b2) g^2.
  const double m = 0.1 * 2.0, v = 0.001 * 4.0;
  const double lr_hat = 0.1 * std::sqrt(1.0 - 0.999) / (1.0 - 0.9);
  const double expect = 1.0 - lr_hat * m / (std::sqrt(v) + cfg.eps);
  CHECK(net.W[0](0, 0) == doctest::Approx(expect).epsilon(1e-12));
  // ...which is the textbook m_hat/(sqrt(v_hat)+eps) step up to an eps rescale
  const double m_hat = m / (1.0 - 0.9), v_hat = v / (1.0 - 0.999);
  CHECK(net.W[0](0, 0) ==
        doctest::Approx(1.0 - 0.1 * m_hat / (std::sqrt(v_hat) + cfg.eps)).epsilon(1e-6));
}

TEST_CASE("adam updates the extra parameter vector alongside the net") {
  Mlp net;
  net.W.push_back(Eigen::MatrixXd::Zero(1, 1));
  net.b.push_back(Eigen::VectorXd::Zero(1));
  AdamState st;
  st.init_like(net, 2);
  AdamConfig cfg;
  cfg.lr = 0.05;

  Eigen::VectorXd extra(2), d_extra(2);
  extra << 0.0, 0.0;
  d_extra << 1.0, -1.0;
  MlpGrads g;
  g.zero_like(net);

  adam_step(net, g, &extra, &d_extra, st, cfg);
  CHECK(extra[0] == doctest::Approx(-0.05).epsilon(1e-6));
  CHECK(extra[1] == doctest::Approx(0.05).epsilon(1e-6));
}
