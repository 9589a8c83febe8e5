#pragma once

#include <numbers>

namespace spindiff {

// All Hamiltonian coefficients are stored as angular frequencies (rad/s).
// User-facing inputs and CSV outputs use linear frequencies (Hz).

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// |gamma_S| of a free-electron-like P1 spin, Hz/T.
inline constexpr double kElectronGammaHzPerTesla = 28.024e9;
/// 13C gyromagnetic ratio, Hz/T.
inline constexpr double kCarbonGammaHzPerTesla = 10.7084e6;

constexpr double to_angular(double hz) { return kTwoPi * hz; }
constexpr double to_linear(double rad_per_s) { return rad_per_s / kTwoPi; }

/// omega_S = |gamma_S| B in rad/s.
constexpr double electron_larmor(double tesla) {
  return to_angular(kElectronGammaHzPerTesla * tesla);
}

/// omega_I = gamma_I B in rad/s.
constexpr double carbon_larmor(double tesla) {
  return to_angular(kCarbonGammaHzPerTesla * tesla);
}

}  // namespace spindiff
