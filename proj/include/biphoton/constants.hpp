#ifndef BIPHOTON_CONSTANTS_HPP
#define BIPHOTON_CONSTANTS_HPP

#include <cmath>

namespace biphoton {

// Speed of light in vacuum [m/s], exact by SI definition.
inline constexpr double c_light = 299792458.0;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

// Angular frequency [rad/s] of a vacuum wavelength [m].
inline double wavelength_to_omega(double lambda_m) {
  return two_pi * c_light / lambda_m;
}

inline double omega_to_wavelength(double omega_rad_s) {
  return two_pi * c_light / omega_rad_s;
}

// First-order conversion of a wavelength interval [m] centred on lambda0 [m]
// into an angular-frequency interval [rad/s].  Used wherever a band is
// specified in nanometres but the solver works on a frequency grid.
inline double bandwidth_to_omega(double delta_lambda_m, double lambda0_m) {
  return two_pi * c_light * delta_lambda_m / (lambda0_m * lambda0_m);
}

}  // namespace biphoton

#endif  // BIPHOTON_CONSTANTS_HPP
