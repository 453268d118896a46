#pragma once

#include <numbers>

namespace weakmass::si {

inline constexpr double hbar = 1.054571817e-34;      // J s
inline constexpr double speed_of_light = 299792458.0; // m / s
inline constexpr double pi = std::numbers::pi;

}  // namespace weakmass::si
