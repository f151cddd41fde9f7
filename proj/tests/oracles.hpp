#pragma once

// Closed forms and brute-force references used only by the tests. Nothing
// here calls into the library's quadrature or Matsubara code.

#include <cmath>
#include <numbers>

namespace oracle {

inline constexpr double kB = 1.380649e-23;
inline constexpr double hbar = 1.054572e-34;
inline constexpr double c = 2.99792458e8;
inline constexpr double G = 6.674e-11;
inline constexpr double pi = std::numbers::pi;
inline constexpr double zeta3 = 1.2020569031595942854;

// T = 0 ideal-metal pressure and free energy per unit area.
inline double ideal_pressure_t0(double z) { return -pi * pi * hbar * c / (240.0 * std::pow(z, 4)); }
inline double ideal_free_energy_t0(double z) {
  return -pi * pi * hbar * c / (720.0 * std::pow(z, 3));
}

// High-temperature (l = 0 only) ideal-metal pressure.
inline double ideal_pressure_classical(double z, double T) {
  return -kB * T * zeta3 / (4.0 * pi * z * z * z);
}

// Int_a^inf y^2 / (e^y - 1) dy as a convergent series.
inline double bose_tail_integral(double a) {
  if (a == 0.0) return 2.0 * zeta3;
  double s = 0.0;
  for (int n = 1; n < 100000; ++n) {
    const double term = std::exp(-n * a) * (a * a / n + 2.0 * a / (n * double(n)) +
                                            2.0 / (double(n) * n * n));
    s += term;
    if (term < 1e-18 * s) break;
  }
  return s;
}

// Exact ideal-metal Lifshitz pressure at temperature T, summed to convergence.
inline double ideal_pressure_exact(double z, double T) {
  const double xi1 = 2.0 * pi * kB * T / hbar;
  const double dy = 2.0 * xi1 * z / c;
  double s = 0.5 * 2.0 * bose_tail_integral(0.0);
  for (int l = 1; l * dy < 80.0; ++l) s += 2.0 * bose_tail_integral(l * dy);
  return -(kB * T / pi) / (8.0 * z * z * z) * s;
}

inline double drude_closed_form(double wp, double gamma, double xi) {
  return 1.0 + wp * wp / (xi * (xi + gamma));
}

}  // namespace oracle
