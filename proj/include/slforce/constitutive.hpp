#pragma once

#include <functional>
#include <vector>

namespace slforce::constitutive {

enum class Model { Elastic, Maxwell, KelvinVoigt };

struct MaterialParams {
  Model model = Model::KelvinVoigt;
  double elastic_modulus_pa = 0.0;        // E
  double viscosity_pa_s = 0.0;            // eta
  double lumped_stiffness_n_per_m = 0.0;  // k
  double lumped_damping_n_s_per_m = 0.0;  // c
};

void validate(const MaterialParams& params);

using TimeFn = std::function<double(double)>;

// Spring and damper in parallel: sigma = E * eps + eta * deps/dt.
double kelvin_voigt_stress(const MaterialParams& params, double strain,
                           double strain_rate);

// Same, with the strain given as a function of time. The rate comes from
// `strain_rate` when provided, otherwise from a central difference of
// width fd_dt.
double kelvin_voigt_stress(const MaterialParams& params, const TimeFn& strain,
                           double t, const TimeFn& strain_rate = nullptr,
                           double fd_dt = 1e-6);

// Lumped form F = k x + c dx/dt.
double lumped_force(const MaterialParams& params, double x, double xdot);

// Spring and damper in series: deps/dt = (dsigma/dt)/E + sigma/eta.
// Creep: integrate strain under a prescribed stress history (RK4).
// stress_rate falls back to a central difference when null.
std::vector<double> maxwell_creep(const MaterialParams& params,
                                  const TimeFn& stress,
                                  const std::vector<double>& t_grid,
                                  double strain0,
                                  const TimeFn& stress_rate = nullptr,
                                  double fd_dt = 1e-6);

// Relaxation: integrate stress under a prescribed strain-rate history via
// the rearranged ODE dsigma/dt = E (deps/dt - sigma/eta).
std::vector<double> maxwell_relax(const MaterialParams& params,
                                  const TimeFn& strain_rate,
                                  const std::vector<double>& t_grid,
                                  double stress0);

// Force trajectory for a sampled elongation profile under the lumped
// Kelvin-Voigt law; velocities by central differences, one-sided at the
// ends.
std::vector<double> traction_force(const MaterialParams& params,
                                   const std::vector<double>& x,
                                   const std::vector<double>& t_grid);

}  // namespace slforce::constitutive
