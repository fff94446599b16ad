#pragma once

#include "slforce/forcenet.hpp"

// Central finite differences of the batch loss with respect to every
// parameter; the independent check for the analytic backward pass.
namespace slforce::testsupport {

struct FdReport {
  double worst_rel = 0.0;
  int checked = 0;
};

inline double loss_of(const net::NetParams& params, const net::Batch& batch,
                      std::uint64_t seed) {
  const Eigen::VectorXd pred =
      net::forward_batch(params, batch.clouds, net::Mode::Train, seed);
  return net::mse_loss(pred, batch.targets);
}

inline FdReport fd_check(const net::NetParams& params, const net::Batch& batch,
                         std::uint64_t seed, double h = 1e-6) {
  auto [grads, loss] = net::backward(params, batch, seed);
  (void)loss;

  FdReport report;
  net::NetParams work = params;
  std::vector<net::Layer*> work_layers, grad_layers;
  net::for_each_layer(work, [&](net::Layer& l) { work_layers.push_back(&l); });
  net::for_each_layer(grads, [&](net::Layer& l) { grad_layers.push_back(&l); });

  for (size_t li = 0; li < work_layers.size(); ++li) {
    auto probe = [&](double* slot, double analytic) {
      const double saved = *slot;
      *slot = saved + h;
      const double up = loss_of(work, batch, seed);
      *slot = saved - h;
      const double down = loss_of(work, batch, seed);
      *slot = saved;
      const double fd = (up - down) / (2.0 * h);
      const double scale = std::max({1.0, std::fabs(fd), std::fabs(analytic)});
      report.worst_rel =
          std::max(report.worst_rel, std::fabs(fd - analytic) / scale);
      ++report.checked;
    };
    for (Eigen::Index k = 0; k < work_layers[li]->w.size(); ++k) {
      probe(work_layers[li]->w.data() + k, grad_layers[li]->w.data()[k]);
    }
    for (Eigen::Index k = 0; k < work_layers[li]->b.size(); ++k) {
      probe(work_layers[li]->b.data() + k, grad_layers[li]->b.data()[k]);
    }
  }
  return report;
}

}  // namespace slforce::testsupport
