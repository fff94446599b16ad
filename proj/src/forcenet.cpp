#include "slforce/forcenet.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>

namespace slforce::net {

void validate(const NetConfig& config) {
  if (config.n_points < 1) {
    throw std::invalid_argument("net config: n_points must be >= 1");
  }
  if (config.point_mlp_widths.empty() || config.head_widths.empty()) {
    throw std::invalid_argument("net config: empty layer stack");
  }
  if (config.head_widths.back() != 1) {
    throw std::invalid_argument("net config: final head width must be 1");
  }
  for (int w : config.point_mlp_widths) {
    if (w < 1) throw std::invalid_argument("net config: widths must be >= 1");
  }
  for (int w : config.head_widths) {
    if (w < 1) throw std::invalid_argument("net config: widths must be >= 1");
  }
  if (!(config.elu_alpha > 0.0)) {
    throw std::invalid_argument("net config: elu_alpha must be positive");
  }
  if (config.dropout_rate < 0.0 || config.dropout_rate >= 1.0) {
    throw std::invalid_argument("net config: dropout_rate must be in [0,1)");
  }
  if (config.use_input_tnet &&
      (config.tnet_point_widths.empty() || config.tnet_head_widths.empty())) {
    throw std::invalid_argument("net config: t-net enabled but has no layers");
  }
}

double elu_grad(double x, double alpha) {
  if (x > 0.0) return 1.0;
  if (x == 0.0) return 1.0;
  return alpha * std::exp(x);
}

namespace {

// ELU applied from pre-activations.
inline Eigen::MatrixXd elu_mat(const Eigen::MatrixXd& z, double alpha) {
  return z.array().max(0.0) + alpha * ((z.array().min(0.0)).exp() - 1.0);
}

// Derivative recovered from the activation value: elu is strictly
// monotone, so a >= 0 iff z >= 0, and alpha * e^z == a + alpha for z < 0.
inline Eigen::ArrayXXd elu_grad_from_act(const Eigen::MatrixXd& a,
                                         double alpha) {
  return (a.array() >= 0.0).select(Eigen::ArrayXXd::Ones(a.rows(), a.cols()),
                                   a.array() + alpha);
}

std::vector<int> layer_dims(int input, const std::vector<int>& widths) {
  std::vector<int> dims{input};
  dims.insert(dims.end(), widths.begin(), widths.end());
  return dims;
}

void init_stack(std::vector<Layer>& layers, const std::vector<int>& dims,
                std::mt19937_64& rng) {
  layers.clear();
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    Layer layer;
    layer.w.resize(dims[i], dims[i + 1]);
    const double s = std::sqrt(1.0 / dims[i]);
    for (Eigen::Index k = 0; k < layer.w.size(); ++k) {
      layer.w.data()[k] = (2.0 * uniform01(rng) - 1.0) * s;
    }
    layer.b = Eigen::VectorXd::Zero(dims[i + 1]);
    layers.push_back(std::move(layer));
  }
}

}  // namespace

NetParams init_params(const NetConfig& config, std::uint64_t seed) {
  validate(config);
  NetParams p;
  p.config = config;
  std::mt19937_64 rng(seed);
  if (config.use_input_tnet) {
    init_stack(p.tnet_point, layer_dims(3, config.tnet_point_widths), rng);
    std::vector<int> head = config.tnet_head_widths;
    head.push_back(9);
    init_stack(p.tnet_head,
               layer_dims(config.tnet_point_widths.back(), head), rng);
    // Identity start: the output layer contributes zero.
    p.tnet_head.back().w.setZero();
    p.tnet_head.back().b.setZero();
  }
  init_stack(p.point_layers, layer_dims(3, config.point_mlp_widths), rng);
  init_stack(p.head_layers,
             layer_dims(config.point_mlp_widths.back(), config.head_widths),
             rng);
  return p;
}

NetParams zeros_like(const NetParams& params) {
  NetParams z = params;
  for_each_layer(z, [](Layer& l) {
    l.w.setZero();
    l.b.setZero();
  });
  return z;
}

void for_each_layer(NetParams& p, const std::function<void(Layer&)>& fn) {
  for (auto& l : p.tnet_point) fn(l);
  for (auto& l : p.tnet_head) fn(l);
  for (auto& l : p.point_layers) fn(l);
  for (auto& l : p.head_layers) fn(l);
}

void for_each_layer(const NetParams& p,
                    const std::function<void(const Layer&)>& fn) {
  for (const auto& l : p.tnet_point) fn(l);
  for (const auto& l : p.tnet_head) fn(l);
  for (const auto& l : p.point_layers) fn(l);
  for (const auto& l : p.head_layers) fn(l);
}

struct BatchCache {
  int batch = 0;
  int n = 0;
  Eigen::MatrixXd input;       // (B*n, 3)
  Eigen::MatrixXd point_in;    // transformed input when the t-net is on
  std::vector<Eigen::MatrixXd> tnet_point_act;
  Eigen::MatrixXd tnet_pooled;
  std::vector<Eigen::Index> tnet_argmax;  // B * F global row indices
  std::vector<Eigen::MatrixXd> tnet_head_act;  // hidden only
  Eigen::MatrixXd tnet_out;                    // (B, 9)
  std::vector<Eigen::Matrix3d> transforms;
  std::vector<Eigen::MatrixXd> point_act;
  Eigen::MatrixXd pooled;
  std::vector<Eigen::Index> pool_argmax;
  std::vector<Eigen::MatrixXd> head_act;      // hidden, post-dropout
  std::vector<Eigen::ArrayXXd> head_grad;     // ELU grad per hidden layer
  std::vector<Eigen::ArrayXXd> dropout_mask;  // scaled keep masks
  Eigen::VectorXd pred;
};

namespace {

void max_pool(const Eigen::MatrixXd& acts, int batch, int n,
              Eigen::MatrixXd& pooled, std::vector<Eigen::Index>& argmax) {
  const Eigen::Index f = acts.cols();
  pooled.resize(batch, f);
  argmax.assign(static_cast<size_t>(batch) * f, 0);
  for (int b = 0; b < batch; ++b) {
    const auto block = acts.middleRows(static_cast<Eigen::Index>(b) * n, n);
    for (Eigen::Index j = 0; j < f; ++j) {
      Eigen::Index row;
      pooled(b, j) = block.col(j).maxCoeff(&row);
      argmax[static_cast<size_t>(b) * f + j] =
          static_cast<Eigen::Index>(b) * n + row;
    }
  }
}

}  // namespace

Eigen::VectorXd forward_batch(const NetParams& params,
                              const std::vector<geom::Cloud>& clouds,
                              Mode mode, std::uint64_t dropout_seed,
                              BatchCache* cache) {
  validate(params.config);
  const int batch = static_cast<int>(clouds.size());
  if (batch == 0) throw std::invalid_argument("forward: empty batch");
  const int n = static_cast<int>(clouds.front().rows());
  Eigen::MatrixXd x(static_cast<Eigen::Index>(batch) * n, 3);
  for (int b = 0; b < batch; ++b) {
    if (clouds[static_cast<size_t>(b)].rows() != n) {
      throw std::invalid_argument("forward: ragged batch");
    }
    x.middleRows(static_cast<Eigen::Index>(b) * n, n) =
        clouds[static_cast<size_t>(b)];
  }
  if (!x.allFinite()) throw std::invalid_argument("forward: non-finite input");

  BatchCache local;
  BatchCache& c = cache != nullptr ? *cache : local;
  c = BatchCache{};
  c.batch = batch;
  c.n = n;
  c.input = std::move(x);
  const double alpha = params.config.elu_alpha;

  // Optional input transform.
  if (params.config.use_input_tnet) {
    Eigen::MatrixXd a = c.input;
    c.tnet_point_act.clear();
    for (const Layer& l : params.tnet_point) {
      a = elu_mat((a * l.w).rowwise() + l.b.transpose(), alpha);
      c.tnet_point_act.push_back(a);
    }
    max_pool(a, batch, n, c.tnet_pooled, c.tnet_argmax);
    Eigen::MatrixXd h = c.tnet_pooled;
    c.tnet_head_act.clear();
    for (size_t i = 0; i + 1 < params.tnet_head.size(); ++i) {
      const Layer& l = params.tnet_head[i];
      h = elu_mat((h * l.w).rowwise() + l.b.transpose(), alpha);
      c.tnet_head_act.push_back(h);
    }
    const Layer& last = params.tnet_head.back();
    c.tnet_out = (h * last.w).rowwise() + last.b.transpose();

    c.transforms.resize(static_cast<size_t>(batch));
    c.point_in.resize(c.input.rows(), 3);
    for (int b = 0; b < batch; ++b) {
      Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) t(i, j) += c.tnet_out(b, 3 * i + j);
      }
      c.transforms[static_cast<size_t>(b)] = t;
      c.point_in.middleRows(static_cast<Eigen::Index>(b) * n, n) =
          c.input.middleRows(static_cast<Eigen::Index>(b) * n, n) * t;
    }
  } else {
    c.point_in = c.input;
  }

  // Shared per-point MLP.
  Eigen::MatrixXd a = c.point_in;
  c.point_act.clear();
  for (const Layer& l : params.point_layers) {
    a = elu_mat((a * l.w).rowwise() + l.b.transpose(), alpha);
    c.point_act.push_back(a);
  }
  max_pool(a, batch, n, c.pooled, c.pool_argmax);

  // Head: ELU + dropout on hidden layers, linear output.
  const double rate = params.config.dropout_rate;
  std::mt19937_64 drop_rng(dropout_seed);
  Eigen::MatrixXd h = c.pooled;
  c.head_act.clear();
  c.head_grad.clear();
  c.dropout_mask.clear();
  for (size_t i = 0; i + 1 < params.head_layers.size(); ++i) {
    const Layer& l = params.head_layers[i];
    Eigen::MatrixXd act = elu_mat((h * l.w).rowwise() + l.b.transpose(), alpha);
    c.head_grad.push_back(elu_grad_from_act(act, alpha));
    if (mode == Mode::Train && rate > 0.0) {
      Eigen::ArrayXXd mask(act.rows(), act.cols());
      const double keep_scale = 1.0 / (1.0 - rate);
      for (Eigen::Index r = 0; r < mask.rows(); ++r) {
        for (Eigen::Index cidx = 0; cidx < mask.cols(); ++cidx) {
          mask(r, cidx) = uniform01(drop_rng) >= rate ? keep_scale : 0.0;
        }
      }
      act.array() *= mask;
      c.dropout_mask.push_back(std::move(mask));
    } else {
      c.dropout_mask.emplace_back(
          Eigen::ArrayXXd::Ones(act.rows(), act.cols()));
    }
    h = act;
    c.head_act.push_back(h);
  }
  const Layer& out = params.head_layers.back();
  c.pred = ((h * out.w).rowwise() + out.b.transpose()).col(0);
  return c.pred;
}

double forward(const NetParams& params, const geom::Cloud& cloud, Mode mode,
               std::uint64_t dropout_seed) {
  return forward_batch(params, {cloud}, mode, dropout_seed)(0);
}

double mse_loss(const Eigen::VectorXd& predictions,
                const Eigen::VectorXd& targets) {
  if (predictions.size() == 0 || predictions.size() != targets.size()) {
    throw std::invalid_argument("mse_loss: empty or mismatched batch");
  }
  return (predictions - targets).squaredNorm() /
         static_cast<double>(predictions.size());
}

namespace {

// Scatter pooled gradients back to the argmax rows.
Eigen::MatrixXd unpool(const Eigen::MatrixXd& dpooled,
                       const std::vector<Eigen::Index>& argmax,
                       Eigen::Index total_rows) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(total_rows, dpooled.cols());
  for (Eigen::Index b = 0; b < dpooled.rows(); ++b) {
    for (Eigen::Index j = 0; j < dpooled.cols(); ++j) {
      out(argmax[static_cast<size_t>(b) * dpooled.cols() + j], j) +=
          dpooled(b, j);
    }
  }
  return out;
}

}  // namespace

std::pair<NetParams, double> backward(const NetParams& params,
                                      const Batch& batch,
                                      std::uint64_t dropout_seed) {
  if (batch.clouds.empty() ||
      static_cast<Eigen::Index>(batch.clouds.size()) != batch.targets.size()) {
    throw std::invalid_argument("backward: empty or mismatched batch");
  }
  BatchCache c;
  const Eigen::VectorXd pred =
      forward_batch(params, batch.clouds, Mode::Train, dropout_seed, &c);
  const double loss = mse_loss(pred, batch.targets);

  NetParams grads = zeros_like(params);
  const double alpha = params.config.elu_alpha;
  const int batch_size = c.batch;

  // d loss / d pred.
  Eigen::MatrixXd delta =
      (2.0 / batch_size) * (pred - batch.targets);

  // Head output layer.
  {
    const Layer& out = params.head_layers.back();
    Layer& g = grads.head_layers.back();
    const Eigen::MatrixXd& prev =
        params.head_layers.size() > 1 ? c.head_act.back() : c.pooled;
    g.w = prev.transpose() * delta;
    g.b = delta.colwise().sum().transpose();
    delta = delta * out.w.transpose();
  }
  // Hidden head layers, reverse order.
  for (int i = static_cast<int>(params.head_layers.size()) - 2; i >= 0; --i) {
    delta.array() *= c.dropout_mask[static_cast<size_t>(i)];
    delta.array() *= c.head_grad[static_cast<size_t>(i)];
    const Eigen::MatrixXd& prev =
        i > 0 ? c.head_act[static_cast<size_t>(i - 1)] : c.pooled;
    Layer& g = grads.head_layers[static_cast<size_t>(i)];
    g.w = prev.transpose() * delta;
    g.b = delta.colwise().sum().transpose();
    delta = delta * params.head_layers[static_cast<size_t>(i)].w.transpose();
  }

  // Through the max pool.
  Eigen::MatrixXd dpoint = unpool(delta, c.pool_argmax, c.point_in.rows());

  // Point MLP, reverse order.
  for (int i = static_cast<int>(params.point_layers.size()) - 1; i >= 0; --i) {
    dpoint.array() *=
        elu_grad_from_act(c.point_act[static_cast<size_t>(i)], alpha);
    const Eigen::MatrixXd& prev =
        i > 0 ? c.point_act[static_cast<size_t>(i - 1)] : c.point_in;
    Layer& g = grads.point_layers[static_cast<size_t>(i)];
    g.w = prev.transpose() * dpoint;
    g.b = dpoint.colwise().sum().transpose();
    dpoint = dpoint * params.point_layers[static_cast<size_t>(i)].w.transpose();
  }

  // Input transform.
  if (params.config.use_input_tnet) {
    const int n = c.n;
    Eigen::MatrixXd dtout(batch_size, 9);
    for (int b = 0; b < batch_size; ++b) {
      const auto xin = c.input.middleRows(static_cast<Eigen::Index>(b) * n, n);
      const auto dx = dpoint.middleRows(static_cast<Eigen::Index>(b) * n, n);
      const Eigen::Matrix3d dt = xin.transpose() * dx;
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) dtout(b, 3 * i + j) = dt(i, j);
      }
    }
    // T-net head.
    {
      const Layer& out = params.tnet_head.back();
      Layer& g = grads.tnet_head.back();
      const Eigen::MatrixXd& prev = params.tnet_head.size() > 1
                                        ? c.tnet_head_act.back()
                                        : c.tnet_pooled;
      g.w = prev.transpose() * dtout;
      g.b = dtout.colwise().sum().transpose();
      dtout = dtout * out.w.transpose();
    }
    for (int i = static_cast<int>(params.tnet_head.size()) - 2; i >= 0; --i) {
      dtout.array() *= elu_grad_from_act(
          c.tnet_head_act[static_cast<size_t>(i)], alpha);
      const Eigen::MatrixXd& prev =
          i > 0 ? c.tnet_head_act[static_cast<size_t>(i - 1)] : c.tnet_pooled;
      Layer& g = grads.tnet_head[static_cast<size_t>(i)];
      g.w = prev.transpose() * dtout;
      g.b = dtout.colwise().sum().transpose();
      dtout = dtout * params.tnet_head[static_cast<size_t>(i)].w.transpose();
    }
    Eigen::MatrixXd dtp = unpool(dtout, c.tnet_argmax, c.input.rows());
    for (int i = static_cast<int>(params.tnet_point.size()) - 1; i >= 0; --i) {
      dtp.array() *=
          elu_grad_from_act(c.tnet_point_act[static_cast<size_t>(i)], alpha);
      const Eigen::MatrixXd& prev =
          i > 0 ? c.tnet_point_act[static_cast<size_t>(i - 1)] : c.input;
      Layer& g = grads.tnet_point[static_cast<size_t>(i)];
      g.w = prev.transpose() * dtp;
      g.b = dtp.colwise().sum().transpose();
      dtp = dtp * params.tnet_point[static_cast<size_t>(i)].w.transpose();
    }
  }

  return {std::move(grads), loss};
}

namespace {

template <class T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::ifstream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("checkpoint: truncated file");
  return v;
}

void write_shapes(std::ofstream& out, const std::vector<Layer>& layers) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(layers.size()));
  for (const Layer& l : layers) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(l.w.rows()));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(l.w.cols()));
  }
}

std::vector<Layer> read_shapes(std::ifstream& in) {
  const auto count = read_pod<std::uint32_t>(in);
  std::vector<Layer> layers(count);
  for (auto& l : layers) {
    const auto rows = read_pod<std::uint32_t>(in);
    const auto cols = read_pod<std::uint32_t>(in);
    l.w.resize(rows, cols);
    l.b.resize(cols);
  }
  return layers;
}

}  // namespace

void save_checkpoint(const std::string& path, const NetParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("checkpoint: cannot write " + path);
  out.write("IFN1", 4);
  write_pod<std::uint32_t>(out, 1);  // version
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(params.config.n_points));
  write_pod<double>(out, params.config.elu_alpha);
  write_pod<double>(out, params.config.dropout_rate);
  write_pod<std::uint32_t>(out, params.config.use_input_tnet ? 1 : 0);
  write_shapes(out, params.tnet_point);
  write_shapes(out, params.tnet_head);
  write_shapes(out, params.point_layers);
  write_shapes(out, params.head_layers);
  for_each_layer(params, [&](const Layer& l) {
    out.write(reinterpret_cast<const char*>(l.w.data()),
              static_cast<std::streamsize>(sizeof(double) * l.w.size()));
    out.write(reinterpret_cast<const char*>(l.b.data()),
              static_cast<std::streamsize>(sizeof(double) * l.b.size()));
  });
  if (!out) throw DataError("checkpoint: write failed for " + path);
}

NetParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot read " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "IFN1", 4) != 0) {
    throw DataError("checkpoint: bad magic in " + path);
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != 1) throw DataError("checkpoint: unsupported version");
  NetParams p;
  p.config.n_points = static_cast<int>(read_pod<std::uint32_t>(in));
  p.config.elu_alpha = read_pod<double>(in);
  p.config.dropout_rate = read_pod<double>(in);
  p.config.use_input_tnet = read_pod<std::uint32_t>(in) != 0;
  p.tnet_point = read_shapes(in);
  p.tnet_head = read_shapes(in);
  p.point_layers = read_shapes(in);
  p.head_layers = read_shapes(in);

  p.config.point_mlp_widths.clear();
  for (const Layer& l : p.point_layers) {
    p.config.point_mlp_widths.push_back(static_cast<int>(l.w.cols()));
  }
  p.config.head_widths.clear();
  for (const Layer& l : p.head_layers) {
    p.config.head_widths.push_back(static_cast<int>(l.w.cols()));
  }
  p.config.tnet_point_widths.clear();
  for (const Layer& l : p.tnet_point) {
    p.config.tnet_point_widths.push_back(static_cast<int>(l.w.cols()));
  }
  p.config.tnet_head_widths.clear();
  for (size_t i = 0; i + 1 < p.tnet_head.size(); ++i) {
    p.config.tnet_head_widths.push_back(
        static_cast<int>(p.tnet_head[i].w.cols()));
  }

  for_each_layer(p, [&](Layer& l) {
    in.read(reinterpret_cast<char*>(l.w.data()),
            static_cast<std::streamsize>(sizeof(double) * l.w.size()));
    in.read(reinterpret_cast<char*>(l.b.data()),
            static_cast<std::streamsize>(sizeof(double) * l.b.size()));
  });
  if (!in) throw DataError("checkpoint: truncated payload in " + path);
  validate(p.config);
  return p;
}

}  // namespace slforce::net
