#pragma once

// Classical spectral chain: boxes of nuclei exchanging magnetization at
// nearest-neighbour rates, with an RF sink on one box.

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "spindiff/analysis.hpp"

namespace spindiff {

struct RateChain {
  int m = 0;                      ///< box count
  std::vector<double> gamma_fwd;  ///< gamma_{i,i+1}, m - 1 entries, 1/s
  std::vector<double> gamma_bwd;  ///< gamma_{i+1,i}, m - 1 entries, 1/s
  std::vector<double> beta;       ///< per-box losses, m entries, 1/s
  int k = 1;                      ///< irradiated box, 1-based
  double a_rf = 0.0;              ///< RF sink rate, 1/s
  Eigen::VectorXd q0;             ///< initial charges

  void validate() const;

  /// Symmetric rates, zero losses, q0 = e_1.
  static RateChain from_rates(const std::vector<double>& rates, int k, double a_rf);
  static RateChain uniform(int m, double gamma0, int k, double a_rf);
};

/// Generator A with dq/dt = A q. The last box has no backflow; `rf_on` adds
/// -a_rf at (k, k).
Eigen::MatrixXd rate_matrix(const RateChain& c, bool rf_on);

struct PulseTrain {
  double tau = 0.0;       ///< delay between pulses, s
  double tau_rf = 1e-3;   ///< pulse length, s
  double total = 1.0;     ///< T, s
  void validate() const;
  /// floor(T / (tau + tau_rf))
  long pulses() const;
  /// RF-free time left after the last composite interval.
  double remainder() const;
};

/// exp(A) by scaling and squaring with a Taylor kernel.
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);

/// Charges after free evolution (no RF) for time t.
Eigen::VectorXd evolve_free(const RateChain& c, double t);

/// Q(T) = exp(A0 r) [exp(A0 tau) exp(A1 tau_RF)]^{n_p} Q0; `trajectory`
/// receives Q after each composite interval.
Eigen::VectorXd evolve_pulse_train(const RateChain& c, const PulseTrain& p,
                                   std::vector<Eigen::VectorXd>* trajectory = nullptr);

/// gamma = gamma0 + factor gamma0 exp(-((k0 - i)/K0)^2) for links i = 1..m-1.
std::vector<double> gaussian_profile(int m, double gamma0, double k0 = 15.0, double width = 2.0,
                                     double factor = 100.0);

struct TauSweep {
  std::vector<double> tau;
  std::vector<double> q_no_rf;   ///< end-box charge without RF
  std::vector<double> q_rf;      ///< end-box charge with the pulse train
  std::vector<double> contrast;  ///< q_no_rf - q_rf
  std::vector<double> normalized;  ///< q_rf / q_no_rf
  std::optional<StretchedFit> fit;
  std::string fit_error;
};

TauSweep tau_sweep(const RateChain& c, const std::vector<double>& taus, const PulseTrain& templ,
                   bool fit = true);

/// 41 log-spaced delays from 1e-4 s to 10^-0.5 s.
std::vector<double> default_tau_grid();

}  // namespace spindiff
