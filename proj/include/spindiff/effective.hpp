#pragma once

// Perturbative effective couplings, effective two-spin and network
// Hamiltonians, and Cayley-tree networks.

#include <string>
#include <vector>

#include "spindiff/spin_model.hpp"

namespace spindiff {

/// Hyperfine-frame quantities of the four-spin cluster, rad/s.
struct TiltedFrequencies {
  double delta12 = 0.0, delta34 = 0.0;
  double omega_z1 = 0.0, omega_x1 = 0.0;
  double omega_z4 = 0.0, omega_x4 = 0.0;
};
TiltedFrequencies tilted_frequencies(const FourSpinParams& p);

/// Hyperfine-dominated regime (Delta12 >~ Delta34 > J_d > omega_I).
struct Regime1Result {
  double delta = 0.0;  ///< nuclear detuning
  double j_eff = 0.0;  ///< third-order flip-flop
  double j_dc = 0.0;   ///< critical electron coupling
  double omega = 0.0;  ///< geometric mean of omega_z1 and omega_z4
  bool hierarchy_ok = false;
  bool large_mismatch = false;  ///< Delta12 >> Delta34 ~ omega
  std::vector<std::string> warnings;
};

/// Electron-coupling-dominated regime (J_d > Delta12 ~ Delta34, omega_I).
struct Regime2Result {
  double delta = 0.0;
  double j_eff = 0.0;
  bool hierarchy_ok = false;
  bool delocalized = false;  ///< delta < j_eff
  std::vector<std::string> warnings;
};

Regime1Result regime1(const FourSpinParams& p, double margin = 2.0);
Regime2Result regime2(const FourSpinParams& p, double margin = 2.0);

/// Order-of-magnitude flip-flop estimate omega_1^2 J_d / (2 A_bar^2).
double coupling_estimate(double omega_1, double a_bar, double j_d);

struct DelocalizationThreshold {
  double mean_form = 0.0;     ///< omega1 A dA / (A^2 - dA^2)
  double pair_form = 0.0;     ///< omega1 |D12^2 - D34^2| / (2 D12 D34), D = A +- dA/2
  double ratio = 1.0;         ///< mean_form / pair_form
};
DelocalizationThreshold delocalization_threshold(double a_bar, double delta_a, double omega_1);

/// H = -(delta/2) I1z + (delta/2) I2z + j_eff (I1x I2x + I1y I2y).
SpinSystem build_effective_pair(double delta, double j_eff);
SpinSystem build_effective_pair(const Regime1Result& r);
SpinSystem build_effective_pair(const Regime2Result& r);

/// Largest population transferred by the effective pair from |up, down>.
double max_transfer(double delta, double j_eff);

struct NetworkCoupling {
  int i = 0;
  int j = 0;
  double j_zz = 0.0;
  double j_xy = 0.0;  ///< coefficient of (I+I- + I-I+)
};

struct NetworkSpec {
  int n_sites = 0;
  std::vector<double> fields;  ///< omega^(i), rad/s; empty means zero
  std::vector<NetworkCoupling> couplings;
  void validate() const;
};

/// Nuclear network; (I+I- + I-I+) = 2 (IxIx + IyIy) so the XY term gets 2 j_xy.
SpinSystem build_network(const NetworkSpec& spec);

struct CayleyTree {
  std::vector<int> rings;
  std::vector<int> ring_of;  ///< ring index per site
  NetworkSpec network;
  std::vector<std::vector<int>> ring_sites() const;
};

/// Tree with the given ring sizes; couplings[r] joins ring r to ring r + 1.
CayleyTree cayley_tree(const std::vector<int>& rings, const std::vector<double>& couplings);

/// Default couplings 2pi x (1, 10, 100) kHz growing outward.
std::vector<double> default_cayley_couplings();

}  // namespace spindiff
