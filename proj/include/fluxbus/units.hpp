#pragma once

#include <cmath>

// Unit conventions used throughout the library:
//   - every energy, rate and frequency is an angular frequency in rad/ns
//     (1 GHz of ordinary frequency = 2*pi rad/ns),
//   - lengths are meters, times are nanoseconds, speeds are m/ns,
//   - wavenumbers are rad/m,
//   - reduced fluxes and phases are radians.
// All file and CLI I/O is in plain GHz/MHz/us etc.; conversion happens at
// the boundary so no 2*pi factors float around inside the numerics.

namespace fluxbus {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

// vacuum light speed, m/s
inline constexpr double c_vacuum = 2.99792458e8;

inline constexpr double ghz_to_radns(double f) { return two_pi * f; }
inline constexpr double radns_to_ghz(double w) { return w / two_pi; }
inline constexpr double mhz_to_radns(double f) { return two_pi * 1e-3 * f; }
inline constexpr double radns_to_mhz(double w) { return 1e3 * w / two_pi; }
inline constexpr double khz_to_radns(double f) { return two_pi * 1e-6 * f; }
inline constexpr double radns_to_khz(double w) { return 1e6 * w / two_pi; }

inline constexpr double mps_to_mpns(double v) { return v * 1e-9; }
inline constexpr double us_to_ns(double t) { return t * 1e3; }
inline constexpr double s_to_ns(double t) { return t * 1e9; }

// wrap an angle to (-pi, pi]
inline double wrap_angle(double a) {
  double w = std::remainder(a, two_pi);
  if (w <= -pi) w += two_pi;
  return w;
}

}  // namespace fluxbus
