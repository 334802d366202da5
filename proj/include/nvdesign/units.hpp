#pragma once

#include <numbers>

namespace nvdesign::units {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Cyclic frequency (Hz) to angular frequency (rad/s).
constexpr double hz_to_rad(double hz) { return two_pi * hz; }
constexpr double rad_to_hz(double rad) { return rad / two_pi; }

constexpr double khz(double v) { return v * 1e3; }
constexpr double us(double v) { return v * 1e-6; }
constexpr double ns(double v) { return v * 1e-9; }
constexpr double gauss_to_tesla(double g) { return g * 1e-4; }

/// 13C gyromagnetic ratio, gamma_n / 2pi = 10.705 MHz/T.
inline constexpr double carbon13_gamma_hz_per_tesla = 10.705e6;

}  // namespace nvdesign::units
