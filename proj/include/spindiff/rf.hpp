#pragma once

// RF-driven four-spin dynamics in the rotating frame: eigen-spectra versus
// electron coupling and time-averaged polarization dip maps.

#include <Eigen/Dense>
#include <vector>

#include "spindiff/spin_model.hpp"

namespace spindiff {

struct RfDrive {
  double amplitude = 0.0;  ///< Omega, rad/s
  double carrier = 0.0;    ///< omega_rf, rad/s
};

/// Time-independent rotating-frame Hamiltonian for a hyperfine-frame system.
/// Each rotated nucleus gets (-omega_z + Omega_z - omega_rf) I'z and
/// Omega_x I'x with Omega_z = Omega cos, Omega_x = Omega sin of its axis.
/// The static omega_x I'x is kept only when omega_rf = 0 (it averages out
/// in the frame rotating at omega_rf).
SpinSystem rotating_frame(const SpinSystem& hyperfine_system, const RfDrive& drive);

struct BranchSpectrum {
  std::vector<double> j_d;    ///< rad/s
  Eigen::MatrixXd energies;   ///< rows: j_d points; cols: branches
};

/// Eigen-energies of the undriven hyperfine-frame block, tracked along the
/// J_d grid by maximum eigenvector overlap.
BranchSpectrum spectrum_vs_jd(const FourSpinParams& p, const std::vector<double>& jd_grid,
                              SubspaceSelector sel = {});

enum class DipInit {
  zero_projection,  ///< carbons up, electrons in |ud> and |du> with equal weight
  electrons_mixed,  ///< carbons up, electrons fully mixed
};

struct DipMapOptions {
  double window = 200e-6;  ///< averaging time T, s
  int samples = 512;
  DipInit init = DipInit::zero_projection;
};

struct DipMap {
  std::vector<double> carrier;  ///< omega_rf, rad/s
  std::vector<double> j_d;      ///< rad/s
  Eigen::MatrixXd nuclear;      ///< (p1 + p4) / 2, rows j_d, cols carrier
  Eigen::MatrixXd electron;     ///< 2 <S2z>
};

/// Single map cell.
std::pair<double, double> dip_cell(const FourSpinParams& p, const RfDrive& drive,
                                   const DipMapOptions& opts);

DipMap dip_map(const FourSpinParams& p, double amplitude, const std::vector<double>& carrier_grid,
               const std::vector<double>& jd_grid, const DipMapOptions& opts = {});

struct Dip {
  double position = 0.0;  ///< refined carrier, rad/s
  double depth = 0.0;     ///< max - value
  std::size_t index = 0;
};

/// Local minima below max - contrast * range, refined by a parabola through
/// the neighbouring samples.
std::vector<Dip> find_dips(const std::vector<double>& x, const std::vector<double>& y,
                           double contrast = 0.05);

/// Carrier frequencies at which the drive connects eigenstates of the secular
/// (transverse-free) rotating-frame block differing by one nuclear flip. The
/// drive amplitude enters through its longitudinal projection only. With
/// `single_nucleus` the electron coupling is switched off, leaving the
/// single-carbon hyperfine lines.
std::vector<double> transition_frequencies(const FourSpinParams& p, double amplitude = 0.0,
                                           SubspaceSelector sel = {},
                                           bool single_nucleus = false);

}  // namespace spindiff
