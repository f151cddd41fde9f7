#pragma once

#include <numbers>

namespace casimir::constants {

// CODATA values; every other module reads them from here.
inline constexpr double kBoltzmann = 1.380649e-23;   // J/K
inline constexpr double kHbar = 1.054572e-34;        // J s
inline constexpr double kSpeedOfLight = 2.99792458e8;  // m/s
inline constexpr double kGravitational = 6.674e-11;  // m^3 / (kg s^2)

inline constexpr double kPi = std::numbers::pi;

// 1 eV expressed as an angular frequency, rad/s.
inline constexpr double kEvToRadPerSec = 1.519267e15;

inline constexpr const char* kConstantsVersion = "CODATA-2018/G-6.674e-11";

}  // namespace casimir::constants
