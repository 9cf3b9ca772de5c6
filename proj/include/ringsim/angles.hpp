#pragma once

#include <cmath>
#include <numbers>

namespace ringsim {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wraps an angle into [0, 2π).
inline double wrap_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0)
    r += kTwoPi;
  // fmod can land exactly on 2π after the correction for tiny negatives.
  if (r >= kTwoPi)
    r = 0.0;
  return r;
}

/// Minimal signed difference a − b on the circle, in (−π, π].
inline double wrap_diff(double a, double b) {
  double d = std::remainder(a - b, kTwoPi);
  if (d <= -std::numbers::pi)
    d += kTwoPi;
  return d;
}

inline constexpr double to_degrees(double rad) { return rad * 180.0 / std::numbers::pi; }
inline constexpr double to_radians(double deg) { return deg * std::numbers::pi / 180.0; }

} // namespace ringsim
