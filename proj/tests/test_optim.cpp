#include "slforce/optim.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace slforce;
using namespace slforce::optim;

namespace {

// Direct unrolling of the update formulas, kept separate from both the
// scalar helper and the array implementation.
struct UnrolledRef {
  double m = 0.0, v = 0.0, theta = 0.0;
  long t = 0;
  void step(double g, const NadamConfig& c) {
    ++t;
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g * g;
    const double m_tilde = c.beta1 * m + (1.0 - c.beta1) * g;
    const double v_hat = v / (1.0 - std::pow(c.beta2, static_cast<double>(t)));
    theta -= c.lr *
             (c.beta1 * m_tilde +
              (1.0 - c.beta1) * g / (1.0 - std::pow(c.beta1, static_cast<double>(t)))) /
             (std::sqrt(v_hat) + c.eps);
  }
};

net::NetParams scalar_params(double value) {
  net::NetConfig cfg;
  cfg.n_points = 1;
  cfg.point_mlp_widths = {1};
  cfg.head_widths = {1};
  net::NetParams p = net::zeros_like(net::init_params(cfg, 1));
  p.head_layers[0].b(0) = value;
  return p;
}

}  // namespace

TEST_CASE("nadam single-step hand oracle") {
  NadamConfig c;  // defaults: lr 0.002, b1 0.9, b2 0.999, eps 1e-8
  NadamScalar s;
  const double theta1 = nadam_scalar_step(s, 0.0, 1.0, c);

  // Hand unroll at t = 1 with g = 1: m = 0.1, v = 0.001, m~ = 0.19,
  // v^ = 1, theta = -lr (0.9 * 0.19 + 0.1 / 0.1) / (1 + eps).
  const double m1 = (1.0 - 0.9) * 1.0;
  const double v1 = (1.0 - 0.999) * 1.0;
  const double m_tilde = 0.9 * m1 + (1.0 - 0.9) * 1.0;
  const double v_hat = v1 / (1.0 - 0.999);
  const double expect =
      -0.002 * (0.9 * m_tilde + (1.0 - 0.9) * 1.0 / (1.0 - 0.9)) /
      (std::sqrt(v_hat) + 1e-8);
  CHECK(std::fabs(theta1 - expect) < 1e-12);
  CHECK(theta1 == doctest::Approx(-0.0023420).epsilon(1e-4));
  CHECK(s.m == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(s.v == doctest::Approx(0.001).epsilon(1e-12));
}

TEST_CASE("zero gradient leaves parameters unchanged") {
  NadamConfig c;
  net::NetParams p = scalar_params(0.7);
  OptState state = make_state(p, c);
  const net::NetParams g = net::zeros_like(p);
  nadam_step(state, p, g);
  CHECK(p.head_layers[0].b(0) == 0.7);
  CHECK(state.t == 1);
}

TEST_CASE("array step matches the scalar reference over 100 random steps") {
  NadamConfig c;
  c.lr = 0.01;
  std::mt19937_64 rng(41);

  net::NetParams p = scalar_params(0.0);
  OptState state = make_state(p, c);
  UnrolledRef ref;

  for (int i = 0; i < 100; ++i) {
    const double g = 2.0 * uniform01(rng) - 1.0;
    net::NetParams grads = net::zeros_like(p);
    grads.head_layers[0].b(0) = g;
    nadam_step(state, p, grads);
    ref.step(g, c);
    CHECK(std::fabs(p.head_layers[0].b(0) - ref.theta) < 1e-12);
    CHECK(std::fabs(state.m.head_layers[0].b(0) - ref.m) < 1e-12);
    CHECK(std::fabs(state.v.head_layers[0].b(0) - ref.v) < 1e-12);
  }
}

TEST_CASE("constant positive gradient decreases theta monotonically") {
  NadamConfig c;
  net::NetParams p = scalar_params(0.0);
  OptState state = make_state(p, c);
  net::NetParams grads = net::zeros_like(p);
  grads.head_layers[0].b(0) = 0.37;
  double prev = 0.0;
  for (int i = 0; i < 10; ++i) {
    nadam_step(state, p, grads);
    CHECK(p.head_layers[0].b(0) < prev);
    prev = p.head_layers[0].b(0);
  }
}

TEST_CASE("long-run step size approaches the learning rate") {
  NadamConfig c;
  NadamScalar s;
  double theta = 0.0;
  double last_step = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double next = nadam_scalar_step(s, theta, 0.8, c);
    last_step = theta - next;
    theta = next;
  }
  CHECK(std::fabs(last_step) >= 0.9 * c.lr);
  CHECK(std::fabs(last_step) <= 1.1 * c.lr);
}

TEST_CASE("beta1 = 0 degenerates to the RMSProp-like update at t = 1") {
  NadamConfig c;
  c.beta1 = 0.0;
  NadamScalar s;
  const double g = 0.64;
  const double theta1 = nadam_scalar_step(s, 0.0, g, c);
  // m~ reduces to g and the momentum term vanishes, so the update is
  // -lr g / (sqrt(v^) + eps) with v^ = g^2.
  const double expect = -c.lr * g / (std::sqrt(g * g) + c.eps);
  CHECK(theta1 == doctest::Approx(expect).epsilon(1e-15));
}

TEST_CASE("non-finite gradients are rejected with the layer named") {
  NadamConfig c;
  net::NetParams p = scalar_params(0.0);
  OptState state = make_state(p, c);
  net::NetParams grads = net::zeros_like(p);
  grads.point_layers[0].w(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(nadam_step(state, p, grads), NumericError);
}

TEST_CASE("training a linear toy task converges") {
  // Force equals a fixed linear functional of the cloud: recoverable by
  // the point MLP + pooling with a small net.
  std::mt19937_64 rng(2);
  net::NetConfig cfg;
  cfg.n_points = 16;
  cfg.point_mlp_widths = {8, 16};
  cfg.head_widths = {8, 1};
  cfg.dropout_rate = 0.0;

  net::Batch data;
  const int n_samples = 160;
  data.targets.resize(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    const double scale = 0.5 + 2.0 * uniform01(rng);
    geom::Cloud c(16, 3);
    for (Eigen::Index k = 0; k < c.size(); ++k) {
      c.data()[k] = (2.0 * uniform01(rng) - 1.0);
    }
    c *= scale;
    data.clouds.push_back(c);
    data.targets(i) = scale;  // recover the cloud scale
  }
  net::Batch val;
  for (int i = 0; i < 20; ++i) {
    val.clouds.push_back(data.clouds[static_cast<size_t>(i)]);
  }
  val.targets = data.targets.head(20);

  TrainConfig tc;
  tc.epochs = 200;
  tc.batch_size = 16;
  tc.seed = 7;
  tc.nadam.lr = 0.005;
  const TrainResult res = train(cfg, tc, data, val);
  CHECK(res.history.back().train_mse < 1e-2);
  CHECK(res.history.size() == 200);
}

TEST_CASE("zero epochs returns the initial parameters") {
  net::NetConfig cfg;
  cfg.n_points = 4;
  cfg.point_mlp_widths = {4};
  cfg.head_widths = {1};
  net::Batch data;
  data.clouds = {geom::Cloud::Zero(4, 3)};
  data.clouds[0](0, 0) = 1.0;
  data.targets.resize(1);
  data.targets << 1.0;
  TrainConfig tc;
  tc.epochs = 0;
  tc.seed = 9;
  const TrainResult res = train(cfg, tc, data, {});
  const net::NetParams init = net::init_params(cfg, tc.seed);
  CHECK(res.params.point_layers[0].w == init.point_layers[0].w);
  CHECK(res.history.empty());
}

TEST_CASE("training twice with the same seed is bit-identical") {
  std::mt19937_64 rng(31);
  net::NetConfig cfg;
  cfg.n_points = 8;
  cfg.point_mlp_widths = {6};
  cfg.head_widths = {4, 1};
  cfg.dropout_rate = 0.3;
  net::Batch data;
  data.targets.resize(24);
  for (int i = 0; i < 24; ++i) {
    geom::Cloud c(8, 3);
    for (Eigen::Index k = 0; k < c.size(); ++k) {
      c.data()[k] = uniform01(rng);
    }
    data.clouds.push_back(c);
    data.targets(i) = uniform01(rng);
  }
  TrainConfig tc;
  tc.epochs = 5;
  tc.batch_size = 7;  // exercise a ragged final batch
  tc.seed = 12345;
  const TrainResult a = train(cfg, tc, data, data);
  const TrainResult b = train(cfg, tc, data, data);
  REQUIRE(a.history.size() == b.history.size());
  for (size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].train_mse == b.history[i].train_mse);
    CHECK(a.history[i].val_mse == b.history[i].val_mse);
  }
  CHECK(a.params.head_layers.back().b == b.params.head_layers.back().b);
}

TEST_CASE("predict matches chunk boundaries") {
  net::NetConfig cfg;
  cfg.n_points = 4;
  cfg.point_mlp_widths = {4};
  cfg.head_widths = {1};
  const net::NetParams p = net::init_params(cfg, 3);
  std::mt19937_64 rng(8);
  std::vector<geom::Cloud> clouds;
  for (int i = 0; i < 11; ++i) {
    geom::Cloud c(4, 3);
    for (Eigen::Index k = 0; k < c.size(); ++k) c.data()[k] = uniform01(rng);
    clouds.push_back(c);
  }
  const Eigen::VectorXd a = predict(p, clouds, 4);
  const Eigen::VectorXd b = predict(p, clouds, 11);
  for (int i = 0; i < 11; ++i) {
    CHECK(a(i) == doctest::Approx(b(i)).epsilon(1e-12));
  }
}
