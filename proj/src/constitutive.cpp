#include "slforce/constitutive.hpp"

#include <cmath>
#include <stdexcept>

namespace slforce::constitutive {
namespace {

void check_grid(const std::vector<double>& t_grid) {
  if (t_grid.size() < 2) {
    throw std::invalid_argument("time grid needs at least two samples");
  }
  for (size_t i = 1; i < t_grid.size(); ++i) {
    if (!(t_grid[i] - t_grid[i - 1] > 0.0)) {
      throw std::invalid_argument("time grid must be strictly increasing");
    }
  }
}

// Classic RK4 for dy/dt = f(t, y) on a (possibly non-uniform) grid.
std::vector<double> rk4(const std::function<double(double, double)>& f,
                        const std::vector<double>& t_grid, double y0) {
  std::vector<double> y(t_grid.size());
  y[0] = y0;
  for (size_t i = 1; i < t_grid.size(); ++i) {
    const double t = t_grid[i - 1];
    const double h = t_grid[i] - t_grid[i - 1];
    const double k1 = f(t, y[i - 1]);
    const double k2 = f(t + 0.5 * h, y[i - 1] + 0.5 * h * k1);
    const double k3 = f(t + 0.5 * h, y[i - 1] + 0.5 * h * k2);
    const double k4 = f(t + h, y[i - 1] + h * k3);
    y[i] = y[i - 1] + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return y;
}

}  // namespace

void validate(const MaterialParams& params) {
  if (params.model != Model::Elastic && !(params.viscosity_pa_s > 0.0)) {
    throw std::invalid_argument(
        "material: viscoelastic models need positive viscosity");
  }
  if (!(params.elastic_modulus_pa > 0.0) &&
      !(params.lumped_stiffness_n_per_m > 0.0)) {
    throw std::invalid_argument("material: need a positive stiffness");
  }
}

double kelvin_voigt_stress(const MaterialParams& params, double strain,
                           double strain_rate) {
  return params.elastic_modulus_pa * strain +
         params.viscosity_pa_s * strain_rate;
}

double kelvin_voigt_stress(const MaterialParams& params, const TimeFn& strain,
                           double t, const TimeFn& strain_rate, double fd_dt) {
  const double rate =
      strain_rate ? strain_rate(t)
                  : (strain(t + fd_dt) - strain(t - fd_dt)) / (2.0 * fd_dt);
  return kelvin_voigt_stress(params, strain(t), rate);
}

double lumped_force(const MaterialParams& params, double x, double xdot) {
  return params.lumped_stiffness_n_per_m * x +
         params.lumped_damping_n_s_per_m * xdot;
}

std::vector<double> maxwell_creep(const MaterialParams& params,
                                  const TimeFn& stress,
                                  const std::vector<double>& t_grid,
                                  double strain0, const TimeFn& stress_rate,
                                  double fd_dt) {
  check_grid(t_grid);
  const double e = params.elastic_modulus_pa;
  const double eta = params.viscosity_pa_s;
  const auto rate = [&](double t) {
    return stress_rate ? stress_rate(t)
                       : (stress(t + fd_dt) - stress(t - fd_dt)) / (2.0 * fd_dt);
  };
  return rk4([&](double t, double) { return rate(t) / e + stress(t) / eta; },
             t_grid, strain0);
}

std::vector<double> maxwell_relax(const MaterialParams& params,
                                  const TimeFn& strain_rate,
                                  const std::vector<double>& t_grid,
                                  double stress0) {
  check_grid(t_grid);
  const double e = params.elastic_modulus_pa;
  const double eta = params.viscosity_pa_s;
  return rk4(
      [&](double t, double sigma) { return e * (strain_rate(t) - sigma / eta); },
      t_grid, stress0);
}

std::vector<double> traction_force(const MaterialParams& params,
                                   const std::vector<double>& x,
                                   const std::vector<double>& t_grid) {
  if (x.size() != t_grid.size()) {
    throw std::invalid_argument("traction_force: profile/grid size mismatch");
  }
  check_grid(t_grid);
  const size_t n = x.size();
  std::vector<double> force(n);
  for (size_t i = 0; i < n; ++i) {
    double xdot;
    if (i == 0) {
      xdot = (x[1] - x[0]) / (t_grid[1] - t_grid[0]);
    } else if (i == n - 1) {
      xdot = (x[n - 1] - x[n - 2]) / (t_grid[n - 1] - t_grid[n - 2]);
    } else {
      xdot = (x[i + 1] - x[i - 1]) / (t_grid[i + 1] - t_grid[i - 1]);
    }
    force[i] = lumped_force(params, x[i], xdot);
  }
  return force;
}

}  // namespace slforce::constitutive
