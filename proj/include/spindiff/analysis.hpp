#pragma once

// Stretched-exponential fits and the rate densities behind them.

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

namespace spindiff {

/// n log-spaced points from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, int n);

/// S0 - S1 exp(-(tau / tau_d)^eps)
double stretched_model(double tau, double s0, double s1, double tau_d, double eps);

inline constexpr double kMaxStretch = 1.5;

struct StretchedFit {
  double s0 = 0.0;
  double s1 = 0.0;
  double tau_d = 0.0;
  double epsilon = 0.0;
  double residual_rms = 0.0;
  /// Covariance of (S0, S1, tau_d, eps) from the Gauss-Newton Hessian.
  Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();
  std::array<double, 4> std_error{};
  bool converged = false;
  bool epsilon_at_bound = false;
  int evaluations = 0;
  double start_epsilon = 0.0;  ///< multi-start seed that won
};

/// Least squares over (S0, S1, tau_d, eps) with eps in (0, 1.5] enforced by a
/// logistic map and tau_d > 0 by a log map. Starts at eps = 0.5, 0.75, 1.0.
/// `weights` multiply residuals; empty means unweighted.
StretchedFit fit_stretched(const std::vector<double>& tau, const std::vector<double>& s,
                           const std::vector<double>& weights = {});

/// One-sided stable density with Laplace transform exp(-s^alpha), 0 < alpha < 1.
double stable_density(double x, double alpha);

struct RateDensity {
  double tau_d = 0.0;
  double epsilon = 0.0;
  std::vector<double> mu;       ///< rates, 1/s
  std::vector<double> density;  ///< L(mu), s
  double normalization = 0.0;   ///< trapezoid integral over the grid
  /// eps = 1 collapses to a point mass at 1/tau_d.
  bool point_mass = false;
  double atom = 0.0;
};

/// L(mu) with exp(-(tau/tau_d)^eps) = int L(mu) exp(-mu tau) dmu.
RateDensity inverse_laplace_stretched(double tau_d, double eps, const std::vector<double>& mu_grid);

/// Log grid wide enough that the density integrates to 1 within 1e-6.
std::vector<double> default_rate_grid(double tau_d, double eps, int per_decade = 200);

/// Numerical Laplace transform of the density at tau.
double laplace_forward(const RateDensity& d, double tau);

/// Median rate from the cumulative trapezoid integral.
double density_median(const RateDensity& d, double tolerance = 1e-4);

/// Probability mass above mu_threshold.
double tail_mass(const RateDensity& d, double mu_threshold);

/// D = r_C^2 / tau_d in nm^2/s.
double effective_diffusion(double tau_d_seconds, double r_c_nm);

}  // namespace spindiff
