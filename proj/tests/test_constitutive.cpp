#include "slforce/constitutive.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace slforce::constitutive;

namespace {

std::vector<double> uniform_grid(double t0, double t1, double dt) {
  std::vector<double> g;
  for (double t = t0; t <= t1 + 1e-12; t += dt) g.push_back(t);
  return g;
}

MaterialParams kv(double e, double eta) {
  MaterialParams p;
  p.model = Model::KelvinVoigt;
  p.elastic_modulus_pa = e;
  p.viscosity_pa_s = eta;
  return p;
}

MaterialParams lumped(double k, double c) {
  MaterialParams p;
  p.model = Model::KelvinVoigt;
  p.lumped_stiffness_n_per_m = k;
  p.lumped_damping_n_s_per_m = c;
  p.elastic_modulus_pa = k;  // keeps validate() satisfied
  p.viscosity_pa_s = c > 0 ? c : 1.0;
  return p;
}

}  // namespace

TEST_CASE("kelvin-voigt closed forms") {
  const MaterialParams p = kv(2000.0, 35.0);

  // Constant strain: rate term vanishes.
  CHECK(kelvin_voigt_stress(p, 0.01, 0.0) == doctest::Approx(20.0));

  // Ramp eps = r t.
  const double r = 0.003;
  auto ramp = [r](double t) { return r * t; };
  const double sigma = kelvin_voigt_stress(p, ramp, 2.0);
  CHECK(sigma == doctest::Approx(2000.0 * r * 2.0 + 35.0 * r).epsilon(1e-9));

  // Sinusoid: analytic rate vs the finite-difference path.
  const double omega = 2.0 * M_PI;
  auto sine = [omega](double t) { return std::sin(omega * t); };
  auto sine_rate = [omega](double t) { return omega * std::cos(omega * t); };
  for (double t : {0.1, 0.31, 0.77}) {
    const double exact =
        p.elastic_modulus_pa * sine(t) + p.viscosity_pa_s * sine_rate(t);
    const double numeric = kelvin_voigt_stress(p, sine, t, nullptr, 1e-4);
    CHECK(numeric == doctest::Approx(exact).epsilon(1e-6));
    const double analytic = kelvin_voigt_stress(p, sine, t, sine_rate);
    CHECK(analytic == doctest::Approx(exact).epsilon(1e-12));
  }
}

TEST_CASE("maxwell creep under constant stress") {
  const MaterialParams p = kv(2000.0, 2500.0);
  const double sigma0 = 40.0;
  const auto grid = uniform_grid(0.0, 5.0, 1.0 / 30.0);
  const auto eps = maxwell_creep(
      p, [sigma0](double) { return sigma0; }, grid, sigma0 / 2000.0,
      [](double) { return 0.0; });
  for (size_t i = 0; i < grid.size(); ++i) {
    const double expect = sigma0 / 2000.0 + sigma0 * grid[i] / 2500.0;
    CHECK(eps[i] == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("maxwell relaxation under constant strain") {
  const MaterialParams p = kv(2000.0, 2500.0);
  const double sigma0 = 55.0;
  const auto grid = uniform_grid(0.0, 5.0, 1.0 / 30.0);
  const auto sigma =
      maxwell_relax(p, [](double) { return 0.0; }, grid, sigma0);
  double worst = 0.0;
  for (size_t i = 0; i < grid.size(); ++i) {
    const double expect = sigma0 * std::exp(-2000.0 * grid[i] / 2500.0);
    worst = std::max(worst, std::fabs(sigma[i] - expect) / expect);
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("rk4 order on a sinusoidal creep history") {
  const MaterialParams p = kv(1500.0, 900.0);
  const double omega = 3.0;
  auto stress = [omega](double t) { return 10.0 * std::sin(omega * t); };
  auto rate = [omega](double t) { return 10.0 * omega * std::cos(omega * t); };
  auto analytic = [&](double t) {
    // eps(t) = eps0 + (sigma(t) - sigma(0))/E + (1/eta) int_0^t sigma
    return stress(t) / 1500.0 +
           10.0 / 900.0 * (1.0 - std::cos(omega * t)) / omega;
  };
  auto err_at = [&](double dt) {
    const auto grid = uniform_grid(0.0, 2.0, dt);
    const auto eps = maxwell_creep(p, stress, grid, 0.0, rate);
    double worst = 0.0;
    for (size_t i = 0; i < grid.size(); ++i) {
      worst = std::max(worst, std::fabs(eps[i] - analytic(grid[i])));
    }
    return worst;
  };
  const double e1 = err_at(0.05);
  const double e2 = err_at(0.025);
  const double ratio = e1 / e2;
  CHECK(ratio > 8.0);   // within a factor of two of the ideal 16x
  CHECK(ratio < 32.0);
}

TEST_CASE("traction force on ramps and holds") {
  SUBCASE("pure elastic ramp") {
    const MaterialParams p = lumped(40.0, 0.0);
    const auto grid = uniform_grid(0.0, 5.0, 1.0 / 30.0);
    std::vector<double> x(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) x[i] = 0.01 * grid[i];
    const auto f = traction_force(p, x, grid);
    for (size_t i = 0; i < grid.size(); ++i) {
      CHECK(f[i] == doctest::Approx(0.4 * grid[i]).epsilon(1e-9));
    }
    CHECK(f.back() == doctest::Approx(2.0).epsilon(1e-9));
  }
  SUBCASE("hold phase") {
    const MaterialParams p = lumped(40.0, 0.5);
    std::vector<double> grid = uniform_grid(0.0, 1.0, 0.1);
    std::vector<double> x(grid.size(), 0.025);
    const auto f = traction_force(p, x, grid);
    for (double v : f) CHECK(v == doctest::Approx(1.0));
  }
  SUBCASE("damped ramp") {
    const MaterialParams p = lumped(40.0, 0.5);
    const auto grid = uniform_grid(0.0, 5.0, 1.0 / 30.0);
    std::vector<double> x(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) x[i] = 0.01 * grid[i];
    const auto f = traction_force(p, x, grid);
    for (size_t i = 0; i < grid.size(); ++i) {
      CHECK(f[i] == doctest::Approx(0.4 * grid[i] + 0.005).epsilon(1e-9));
    }
  }
  SUBCASE("too few samples") {
    const MaterialParams p = lumped(40.0, 0.0);
    CHECK_THROWS_AS(traction_force(p, {0.0}, {0.0}), std::invalid_argument);
  }
}

TEST_CASE("pure elastic traction is monotone in x") {
  const MaterialParams p = lumped(80.0, 0.0);
  const auto grid = uniform_grid(0.0, 2.0, 0.05);
  std::vector<double> x(grid.size());
  for (size_t i = 0; i < grid.size(); ++i) x[i] = 0.002 * grid[i] * grid[i];
  const auto f = traction_force(p, x, grid);
  for (size_t i = 1; i < f.size(); ++i) CHECK(f[i] > f[i - 1]);
}

TEST_CASE("damping work over a period is non-negative") {
  const MaterialParams p = lumped(40.0, 0.8);
  const double omega = 2.0 * M_PI;
  const auto grid = uniform_grid(0.0, 1.0, 1e-3);
  std::vector<double> x(grid.size());
  for (size_t i = 0; i < grid.size(); ++i) {
    x[i] = 0.01 * std::sin(omega * grid[i]);
  }
  const auto f = traction_force(p, x, grid);
  // W = int (F - kx) dx over one period; the spring part integrates to 0.
  double work = 0.0;
  for (size_t i = 1; i < grid.size(); ++i) {
    const double damp =
        0.5 * ((f[i] - 40.0 * x[i]) + (f[i - 1] - 40.0 * x[i - 1]));
    work += damp * (x[i] - x[i - 1]);
  }
  CHECK(work >= 0.0);
}

TEST_CASE("maxwell integrators reject bad grids") {
  const MaterialParams p = kv(100.0, 100.0);
  CHECK_THROWS_AS(
      maxwell_relax(p, [](double) { return 0.0; }, {0.0, 0.0}, 1.0),
      std::invalid_argument);
  CHECK_THROWS_AS(maxwell_creep(p, [](double) { return 1.0; }, {0.5}, 0.0),
                  std::invalid_argument);
}
