#pragma once

#include "slforce/forcenet.hpp"

#include <cstdint>
#include <vector>

namespace slforce::optim {

struct NadamConfig {
  double lr = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

void validate(const NadamConfig& config);

// First/second moment accumulators shaped like the parameters, plus the
// step counter. t counts completed steps and increments on entry.
struct OptState {
  long t = 0;
  net::NetParams m, v;
  NadamConfig config;
};

OptState make_state(const net::NetParams& like, const NadamConfig& config);

// One Nadam update, element-wise over every parameter:
//   m <- b1 m + (1-b1) g         v <- b2 v + (1-b2) g^2
//   m~ = b1 m + (1-b1) g         v^ = v / (1 - b2^t)
//   theta <- theta - lr * (b1 m~ + (1-b1) g / (1-b1^t)) / (sqrt(v^) + eps)
// Throws NumericError (naming the layer) on non-finite gradients.
void nadam_step(OptState& state, net::NetParams& params,
                const net::NetParams& grads);

// Scalar mirror of the update rule; the unit oracle for the array path.
struct NadamScalar {
  double m = 0.0, v = 0.0;
  long t = 0;
};
double nadam_scalar_step(NadamScalar& s, double theta, double g,
                         const NadamConfig& config);

// Diagnostic bias-corrected momentum m~ / (1 - b1^t).
double bias_corrected_momentum(double m_tilde, double beta1, long t);

// Eval-mode predictions in fixed-size chunks; memory stays bounded and the
// chunking is deterministic.
Eigen::VectorXd predict(const net::NetParams& params,
                        const std::vector<geom::Cloud>& clouds,
                        int chunk_size = 128);

struct TrainConfig {
  int epochs = 60;
  int batch_size = 32;
  std::uint64_t seed = 1;
  NadamConfig nadam;
};

struct EpochStats {
  int epoch = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
};

struct TrainResult {
  net::NetParams params;
  std::vector<EpochStats> history;
};

// Mini-batch training: deterministic shuffle per epoch, backward +
// nadam_step per batch, per-epoch train and validation MSE. A non-finite
// loss aborts with the offending epoch in the message. An empty val set
// records NaN validation entries.
TrainResult train(const net::NetConfig& net_config, const TrainConfig& config,
                  const net::Batch& train_set, const net::Batch& val_set);

}  // namespace slforce::optim
