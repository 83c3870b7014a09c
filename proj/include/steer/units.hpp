// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <limits>

namespace steer {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }

/// Power ratio in dB to linear. -inf dB maps to exactly 0.
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// Linear power ratio to dB. 0 maps to -inf.
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

inline double wavelength_m(double carrier_hz) { return kSpeedOfLight / carrier_hz; }

}  // namespace steer
