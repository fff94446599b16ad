#include "slforce/optim.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace slforce::optim {

void validate(const NadamConfig& config) {
  if (config.beta1 < 0.0 || config.beta1 >= 1.0 || config.beta2 < 0.0 ||
      config.beta2 >= 1.0) {
    throw std::invalid_argument("nadam: decay rates must be in [0,1)");
  }
  if (!(config.lr > 0.0)) {
    throw std::invalid_argument("nadam: learning rate must be positive");
  }
  if (!(config.eps > 0.0)) {
    throw std::invalid_argument("nadam: eps must be positive");
  }
}

OptState make_state(const net::NetParams& like, const NadamConfig& config) {
  validate(config);
  OptState s;
  s.m = net::zeros_like(like);
  s.v = net::zeros_like(like);
  s.config = config;
  return s;
}

namespace {

inline void nadam_update_array(Eigen::Ref<Eigen::ArrayXXd> theta,
                               Eigen::Ref<Eigen::ArrayXXd> m,
                               Eigen::Ref<Eigen::ArrayXXd> v,
                               const Eigen::Ref<const Eigen::ArrayXXd>& g,
                               const NadamConfig& c, long t) {
  const double b1 = c.beta1;
  const double b2 = c.beta2;
  const double m_corr = 1.0 - std::pow(b1, static_cast<double>(t));
  const double v_corr = 1.0 - std::pow(b2, static_cast<double>(t));
  m = b1 * m + (1.0 - b1) * g;
  v = b2 * v + (1.0 - b2) * g.square();
  const Eigen::ArrayXXd m_tilde = b1 * m + (1.0 - b1) * g;
  const Eigen::ArrayXXd v_hat = v / v_corr;
  theta -= c.lr * (b1 * m_tilde + (1.0 - b1) * g / m_corr) /
           (v_hat.sqrt() + c.eps);
}

}  // namespace

void nadam_step(OptState& state, net::NetParams& params,
                const net::NetParams& grads) {
  validate(state.config);
  ++state.t;

  std::vector<net::Layer*> p, m, v;
  std::vector<const net::Layer*> g;
  net::for_each_layer(params, [&](net::Layer& l) { p.push_back(&l); });
  net::for_each_layer(state.m, [&](net::Layer& l) { m.push_back(&l); });
  net::for_each_layer(state.v, [&](net::Layer& l) { v.push_back(&l); });
  net::for_each_layer(grads, [&](const net::Layer& l) { g.push_back(&l); });
  if (p.size() != g.size() || p.size() != m.size()) {
    throw std::invalid_argument("nadam_step: shape mismatch");
  }

  for (size_t i = 0; i < p.size(); ++i) {
    if (!g[i]->w.allFinite() || !g[i]->b.allFinite()) {
      throw NumericError("nadam_step: non-finite gradient in layer " +
                         std::to_string(i));
    }
    if (p[i]->w.rows() != g[i]->w.rows() || p[i]->w.cols() != g[i]->w.cols()) {
      throw std::invalid_argument("nadam_step: gradient shape mismatch");
    }
    nadam_update_array(p[i]->w.array(), m[i]->w.array(), v[i]->w.array(),
                       g[i]->w.array(), state.config, state.t);
    nadam_update_array(p[i]->b.array(), m[i]->b.array(), v[i]->b.array(),
                       g[i]->b.array(), state.config, state.t);
  }
}

double nadam_scalar_step(NadamScalar& s, double theta, double g,
                         const NadamConfig& c) {
  ++s.t;
  const double b1 = c.beta1;
  const double b2 = c.beta2;
  s.m = b1 * s.m + (1.0 - b1) * g;
  s.v = b2 * s.v + (1.0 - b2) * g * g;
  const double m_tilde = b1 * s.m + (1.0 - b1) * g;
  const double v_hat = s.v / (1.0 - std::pow(b2, static_cast<double>(s.t)));
  return theta - c.lr *
                     (b1 * m_tilde +
                      (1.0 - b1) * g /
                          (1.0 - std::pow(b1, static_cast<double>(s.t)))) /
                     (std::sqrt(v_hat) + c.eps);
}

double bias_corrected_momentum(double m_tilde, double beta1, long t) {
  return m_tilde / (1.0 - std::pow(beta1, static_cast<double>(t)));
}

Eigen::VectorXd predict(const net::NetParams& params,
                        const std::vector<geom::Cloud>& clouds,
                        int chunk_size) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(clouds.size()));
  for (size_t start = 0; start < clouds.size();
       start += static_cast<size_t>(chunk_size)) {
    const size_t end =
        std::min(clouds.size(), start + static_cast<size_t>(chunk_size));
    const std::vector<geom::Cloud> chunk(clouds.begin() + static_cast<long>(start),
                                         clouds.begin() + static_cast<long>(end));
    out.segment(static_cast<Eigen::Index>(start),
                static_cast<Eigen::Index>(end - start)) =
        net::forward_batch(params, chunk, net::Mode::Eval);
  }
  return out;
}

TrainResult train(const net::NetConfig& net_config, const TrainConfig& config,
                  const net::Batch& train_set, const net::Batch& val_set) {
  if (train_set.clouds.empty()) {
    throw std::invalid_argument("train: empty dataset");
  }
  if (static_cast<Eigen::Index>(train_set.clouds.size()) !=
      train_set.targets.size()) {
    throw std::invalid_argument("train: clouds/targets size mismatch");
  }
  if (config.batch_size < 1) {
    throw std::invalid_argument("train: batch_size must be >= 1");
  }

  TrainResult result;
  result.params = net::init_params(net_config, config.seed);
  OptState state = make_state(result.params, config.nadam);

  const size_t n = train_set.clouds.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 shuffle_rng(derive_seed(config.seed, 0x501ed1ceULL));

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (size_t i = n; i > 1; --i) {
      std::swap(order[i - 1], order[draw_index(shuffle_rng, i)]);
    }
    double loss_sum = 0.0;
    size_t loss_count = 0;
    for (size_t start = 0, step = 0; start < n;
         start += config.batch_size, ++step) {
      const size_t end = std::min(n, start + config.batch_size);
      net::Batch batch;
      batch.clouds.reserve(end - start);
      batch.targets.resize(static_cast<Eigen::Index>(end - start));
      for (size_t i = start; i < end; ++i) {
        batch.clouds.push_back(train_set.clouds[order[i]]);
        batch.targets(static_cast<Eigen::Index>(i - start)) =
            train_set.targets(static_cast<Eigen::Index>(order[i]));
      }
      const std::uint64_t dropout_seed =
          derive_seed(config.seed, static_cast<std::uint64_t>(epoch) + 1,
                      static_cast<std::uint64_t>(step) + 1);
      auto [grads, loss] = net::backward(result.params, batch, dropout_seed);
      if (!std::isfinite(loss)) {
        throw NumericError("train: loss diverged at epoch " +
                           std::to_string(epoch));
      }
      loss_sum += loss * static_cast<double>(end - start);
      loss_count += end - start;
      nadam_step(state, result.params, grads);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_mse = loss_sum / static_cast<double>(loss_count);
    if (!val_set.clouds.empty()) {
      const Eigen::VectorXd pred = predict(result.params, val_set.clouds);
      stats.val_mse = net::mse_loss(pred, val_set.targets);
      if (!std::isfinite(stats.val_mse)) {
        throw NumericError("train: validation loss diverged at epoch " +
                           std::to_string(epoch));
      }
    } else {
      stats.val_mse = std::numeric_limits<double>::quiet_NaN();
    }
    result.history.push_back(stats);
  }
  return result;
}

}  // namespace slforce::optim
