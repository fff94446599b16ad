#pragma once

#include "slforce/core.hpp"
#include "slforce/geometry.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace slforce::net {

struct NetConfig {
  int n_points = 256;
  std::vector<int> point_mlp_widths{64, 64, 64, 128, 1024};
  std::vector<int> head_widths{512, 256, 1};
  double elu_alpha = 1.0;
  double dropout_rate = 0.3;
  bool use_input_tnet = false;
  // T-net topology when enabled; the final 3x3 output layer is implicit.
  std::vector<int> tnet_point_widths{64, 128, 1024};
  std::vector<int> tnet_head_widths{512, 256};
};

void validate(const NetConfig& config);

template <class T>
T elu(T x, T alpha) {
  return x > T(0) ? x : alpha * (std::exp(x) - T(1));
}

// Derivative convention: 1 for x > 0, alpha * exp(x) for x < 0, 1 at 0.
double elu_grad(double x, double alpha);

// Row-major data flows through (in x out) weight matrices: Y = X W + b.
struct Layer {
  Eigen::MatrixXd w;
  Eigen::VectorXd b;
};

struct NetParams {
  NetConfig config;
  std::vector<Layer> tnet_point;  // empty when the t-net is off
  std::vector<Layer> tnet_head;   // includes the final 9-unit layer
  std::vector<Layer> point_layers;
  std::vector<Layer> head_layers;
};

// Fan-in-scaled uniform init, biases zero; the t-net output layer starts
// at zero so its transform begins as the identity.
NetParams init_params(const NetConfig& config, std::uint64_t seed);

NetParams zeros_like(const NetParams& params);

// In canonical layer order: tnet_point, tnet_head, point, head.
void for_each_layer(NetParams& p, const std::function<void(Layer&)>& fn);
void for_each_layer(const NetParams& p,
                    const std::function<void(const Layer&)>& fn);

enum class Mode { Train, Eval };

struct Batch {
  std::vector<geom::Cloud> clouds;  // each n_points x 3
  Eigen::VectorXd targets;          // newtons
};

struct BatchCache;

// Shared per-point MLP -> global max pool -> fully connected head; ELU
// activations, inverted dropout on the hidden head layers in train mode,
// linear output. Eval mode ignores the dropout seed.
Eigen::VectorXd forward_batch(const NetParams& params,
                              const std::vector<geom::Cloud>& clouds,
                              Mode mode, std::uint64_t dropout_seed = 0,
                              BatchCache* cache = nullptr);

double forward(const NetParams& params, const geom::Cloud& cloud, Mode mode,
               std::uint64_t dropout_seed = 0);

double mse_loss(const Eigen::VectorXd& predictions,
                const Eigen::VectorXd& targets);

// Analytic gradient of mse_loss(forward(...)) for every parameter. The max
// pool routes to the argmax point (lowest index on ties).
std::pair<NetParams, double> backward(const NetParams& params,
                                      const Batch& batch,
                                      std::uint64_t dropout_seed = 0);

// Checkpoint: "IFN1" magic, shape header, little-endian doubles in
// canonical layer order (column-major weights, then bias).
void save_checkpoint(const std::string& path, const NetParams& params);
NetParams load_checkpoint(const std::string& path);

}  // namespace slforce::net
