#include "spindiff/analysis.hpp"

#include <unsupported/Eigen/NonLinearOptimization>
#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace spindiff {

std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw std::invalid_argument("invalid log grid");
  std::vector<double> g(n);
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (int i = 0; i < n; ++i) g[i] = std::pow(10.0, a + (b - a) * i / (n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

double stretched_model(double tau, double s0, double s1, double tau_d, double eps) {
  return s0 - s1 * std::exp(-std::pow(tau / tau_d, eps));
}

namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Residuals in the unconstrained parameters (S0, S1, ln tau_d, logit(eps / 1.5)).
struct StretchedResiduals {
  const std::vector<double>& tau;
  const std::vector<double>& y;
  const std::vector<double>& w;

  int inputs() const { return 4; }
  int values() const { return static_cast<int>(tau.size()); }
  double weight(std::size_t i) const { return w.empty() ? 1.0 : w[i]; }

  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& f) const {
    const double tau_d = std::exp(x(2));
    const double eps = kMaxStretch * sigmoid(x(3));
    for (std::size_t i = 0; i < tau.size(); ++i)
      f(static_cast<Eigen::Index>(i)) =
          weight(i) * (stretched_model(tau[i], x(0), x(1), tau_d, eps) - y[i]);
    return 0;
  }

  int df(const Eigen::VectorXd& x, Eigen::MatrixXd& j) const {
    const double tau_d = std::exp(x(2));
    const double sig = sigmoid(x(3));
    const double eps = kMaxStretch * sig;
    for (std::size_t i = 0; i < tau.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const double lr = std::log(tau[i] / tau_d);
      const double z = std::exp(eps * lr);
      const double g = x(1) * std::exp(-z);  // d residual / dz
      j(r, 0) = weight(i);
      j(r, 1) = -weight(i) * std::exp(-z);
      j(r, 2) = -weight(i) * g * eps * z;
      j(r, 3) = weight(i) * g * z * lr * kMaxStretch * sig * (1.0 - sig);
    }
    return 0;
  }
};

double crossing_time(const std::vector<double>& tau, const std::vector<double>& y, double level) {
  for (std::size_t i = 1; i < y.size(); ++i) {
    const double a = y[i - 1] - level;
    const double b = y[i] - level;
    if (a == 0.0) return tau[i - 1];
    if ((a < 0.0) != (b < 0.0)) {
      const double f = a / (a - b);
      return std::exp(std::log(tau[i - 1]) + f * (std::log(tau[i]) - std::log(tau[i - 1])));
    }
  }
  return std::sqrt(tau.front() * tau.back());
}

}  // namespace

StretchedFit fit_stretched(const std::vector<double>& tau, const std::vector<double>& s,
                           const std::vector<double>& weights) {
  if (tau.size() != s.size()) throw std::invalid_argument("fit needs matching tau and S arrays");
  if (!weights.empty() && weights.size() != tau.size())
    throw std::invalid_argument("fit weights must match the data length");
  if (tau.size() < 8) throw std::invalid_argument("fit needs at least 8 points");
  for (std::size_t i = 0; i < tau.size(); ++i) {
    if (!(tau[i] > 0.0)) throw std::invalid_argument("fit delays must be positive");
    if (i && !(tau[i] > tau[i - 1])) throw std::invalid_argument("fit delays must increase");
    if (!std::isfinite(s[i])) throw std::invalid_argument("fit data must be finite");
  }
  if (std::log10(tau.back() / tau.front()) < 1.5)
    throw std::invalid_argument("fit delays must span at least 1.5 decades");
  const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
  if (!(*hi - *lo > 1e-12 * std::max(1.0, std::abs(*hi))))
    throw std::invalid_argument("fit data are constant");

  const double s0 = s.back();
  const double s1 = s.back() - s.front();
  const double tau0 = crossing_time(tau, s, s0 - s1 / std::numbers::e);

  StretchedResiduals fn{tau, s, weights};
  StretchedFit best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (double eps0 : {0.5, 0.75, 1.0}) {
    Eigen::VectorXd x(4);
    x << s0, s1, std::log(tau0), std::log(eps0 / (kMaxStretch - eps0));
    Eigen::LevenbergMarquardt<StretchedResiduals> lm(fn);
    lm.parameters.ftol = 1e-15;
    lm.parameters.xtol = 1e-15;
    lm.parameters.maxfev = 4000;
    const auto status = lm.minimize(x);
    Eigen::VectorXd f(fn.values());
    fn(x, f);
    const double cost = f.squaredNorm();
    if (!std::isfinite(cost) || cost >= best_cost) continue;
    best_cost = cost;
    best = StretchedFit{};
    best.s0 = x(0);
    best.s1 = x(1);
    best.tau_d = std::exp(x(2));
    best.epsilon = kMaxStretch * sigmoid(x(3));
    best.evaluations = static_cast<int>(lm.nfev);
    best.start_epsilon = eps0;
    using Status = Eigen::LevenbergMarquardtSpace::Status;
    best.converged = status != Status::ImproperInputParameters &&
                     status != Status::TooManyFunctionEvaluation && status != Status::UserAsked;
  }
  if (!std::isfinite(best_cost)) throw std::runtime_error("stretched fit produced no finite solution");

  const auto n = static_cast<Eigen::Index>(tau.size());
  best.residual_rms = std::sqrt(best_cost / static_cast<double>(n));
  best.epsilon_at_bound = best.epsilon > kMaxStretch * (1.0 - 1e-6) || best.epsilon < 1e-3;

  // Covariance in the natural parameters.
  Eigen::MatrixXd j(n, 4);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    const double lr = std::log(tau[i] / best.tau_d);
    const double z = std::exp(best.epsilon * lr);
    const double g = best.s1 * std::exp(-z);
    j(i, 0) = w;
    j(i, 1) = -w * std::exp(-z);
    j(i, 2) = -w * g * best.epsilon * z / best.tau_d;
    j(i, 3) = w * g * z * lr;
  }
  const double dof = std::max<double>(1.0, static_cast<double>(n - 4));
  const Eigen::Matrix4d jtj = j.transpose() * j;
  Eigen::CompleteOrthogonalDecomposition<Eigen::Matrix4d> cod(jtj);
  best.covariance = (best_cost / dof) * cod.pseudoInverse();
  for (int k = 0; k < 4; ++k) best.std_error[k] = std::sqrt(std::max(0.0, best.covariance(k, k)));
  return best;
}

namespace {

struct StableKernel {
  double alpha;
  double p;  // 1 / (1 - alpha)

  // log a(phi) given phi and s = pi - phi, both supplied to avoid cancellation.
  double log_a(double phi, double s) const {
    const double sin_phi = phi < s ? std::sin(phi) : std::sin(s);
    return alpha * p * std::log(std::sin(alpha * phi)) + std::log(std::sin((1.0 - alpha) * phi)) -
           p * std::log(sin_phi);
  }
};

}  // namespace

double stable_density(double x, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("stable index must lie in (0, 1)");
  if (!(x > 0.0)) return 0.0;
  const StableKernel k{alpha, 1.0 / (1.0 - alpha)};
  const double pi = std::numbers::pi;
  const double c = std::exp(-alpha * k.p * std::log(x));  // x^{-alpha/(1-alpha)}
  const double log_a0 = alpha * k.p * std::log(alpha) + std::log(1.0 - alpha);  // a(0+)
  const double a0 = std::exp(log_a0);
  const double log_prefactor = std::log(alpha * k.p / pi) - k.p * std::log(x);
  if (c * a0 - log_a0 - log_prefactor > 800.0) return 0.0;

  // The integrand a exp(-c a) peaks where a = 1/c; factor out its maximum.
  const double a_star = std::max(a0, 1.0 / c);
  const double log_peak = std::log(a_star) - c * a_star;
  auto g = [&](double phi, double s) {
    const double la = k.log_a(phi, s);
    return std::exp(la - c * std::exp(la) - log_peak);
  };

  // a is increasing on (0, pi); locate the peak by bisection on log a.
  double peak_phi = 0.0;
  if (1.0 / c > a0) {
    double lo = 0.0, hi = pi;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      (k.log_a(mid, pi - mid) < -std::log(c) ? lo : hi) = mid;
    }
    peak_phi = 0.5 * (lo + hi);
  }

  using boost::math::quadrature::gauss_kronrod;
  constexpr unsigned kDepth = 12;
  constexpr double kTol = 1e-11;
  const double half = 0.5 * pi;
  double total = 0.0;
  auto direct = [&](double a, double b) {
    if (b > a) total += gauss_kronrod<double, 61>::integrate([&](double phi) { return g(phi, pi - phi); }, a, b, kDepth, kTol);
  };
  // Near pi integrate over v = ln(pi - phi); the peak is O(1) wide there.
  auto logarithmic = [&](double v_lo, double v_hi) {
    if (v_hi > v_lo)
      total += gauss_kronrod<double, 61>::integrate(
          [&](double v) {
            const double s = std::exp(v);
            return g(pi - s, s) * s;
          },
          v_lo, v_hi, kDepth, kTol);
  };

  if (peak_phi > 0.0 && peak_phi < half) {
    direct(0.0, peak_phi);
    direct(peak_phi, half);
  } else {
    direct(0.0, half);
  }
  // Near pi, a ~ sin(alpha pi)^p s^-p; below s_min the factor exp(-c a) is under e^-1000.
  const double s_min = std::max(1e-300, std::sin(alpha * pi) * std::pow(1e-3 * c, 1.0 / k.p));
  const double v_lo = std::log(s_min);
  const double v_half = std::log(half);
  if (peak_phi >= half) {
    const double v_peak = std::log(pi - peak_phi);
    logarithmic(v_lo, std::min(v_peak, v_half));
    logarithmic(std::min(v_peak, v_half), v_half);
  } else {
    logarithmic(v_lo, v_half);
  }
  if (!(total > 0.0)) return 0.0;
  return std::exp(log_prefactor + log_peak + std::log(total));
}

RateDensity inverse_laplace_stretched(double tau_d, double eps, const std::vector<double>& mu_grid) {
  if (!(tau_d > 0.0)) throw std::invalid_argument("tau_d must be positive");
  if (!(eps > 0.0)) throw std::invalid_argument("stretch exponent must be positive");
  if (eps > 1.0) throw std::invalid_argument("no non-negative rate density exists for eps > 1");
  if (mu_grid.size() < 2) throw std::invalid_argument("rate grid needs at least two points");
  for (std::size_t i = 1; i < mu_grid.size(); ++i)
    if (!(mu_grid[i] > mu_grid[i - 1]) || !(mu_grid[0] > 0.0))
      throw std::invalid_argument("rate grid must be positive and increasing");

  RateDensity d;
  d.tau_d = tau_d;
  d.epsilon = eps;
  d.mu = mu_grid;
  d.density.assign(mu_grid.size(), 0.0);
  if (eps == 1.0) {
    d.point_mass = true;
    d.atom = 1.0 / tau_d;
    d.normalization = 1.0;
    return d;
  }
  const auto n = static_cast<long long>(mu_grid.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (long long i = 0; i < n; ++i) d.density[i] = tau_d * stable_density(mu_grid[i] * tau_d, eps);
  for (double v : d.density)
    if (!std::isfinite(v) || v < 0.0)
      throw std::runtime_error("rate density quadrature produced an invalid value");
  double norm = 0.0;
  for (std::size_t i = 1; i < d.mu.size(); ++i)
    norm += 0.5 * (d.mu[i] * d.density[i] + d.mu[i - 1] * d.density[i - 1]) *
            std::log(d.mu[i] / d.mu[i - 1]);
  d.normalization = norm;
  return d;
}

std::vector<double> default_rate_grid(double tau_d, double eps, int per_decade) {
  if (!(tau_d > 0.0) || !(eps > 0.0) || eps > 1.0)
    throw std::invalid_argument("invalid rate-grid request");
  if (eps == 1.0) return log_grid(1e-3 / tau_d, 1e3 / tau_d, 6 * per_decade + 1);
  // Left edge: exp(-c a0) below e^-60. Right edge: tail mass ~ x^-eps / Gamma(1 - eps) below 1e-7.
  const double p = 1.0 / (1.0 - eps);
  const double a0 = std::pow(eps, eps * p) * (1.0 - eps);
  const double x_lo = std::min(1e-3, 0.5 * std::pow(60.0 / a0, -1.0 / (eps * p)));
  const double x_hi = std::max(1e3, std::pow(1e-7 * boost::math::tgamma(1.0 - eps), -1.0 / eps));
  const double decades = std::log10(x_hi / x_lo);
  const int n = static_cast<int>(std::ceil(decades * per_decade)) + 1;
  return log_grid(x_lo / tau_d, x_hi / tau_d, n);
}

double laplace_forward(const RateDensity& d, double tau) {
  double sum = d.point_mass ? std::exp(-d.atom * tau) : 0.0;
  for (std::size_t i = 1; i < d.mu.size(); ++i) {
    const double f0 = d.mu[i - 1] * d.density[i - 1] * std::exp(-d.mu[i - 1] * tau);
    const double f1 = d.mu[i] * d.density[i] * std::exp(-d.mu[i] * tau);
    sum += 0.5 * (f0 + f1) * std::log(d.mu[i] / d.mu[i - 1]);
  }
  return sum;
}

double density_median(const RateDensity& d, double tolerance) {
  if (d.point_mass) return d.atom;
  if (std::abs(d.normalization - 1.0) > tolerance)
    throw std::invalid_argument("density is not normalized (integral " +
                                std::to_string(d.normalization) + ")");
  const double half = 0.5 * d.normalization;
  double cdf = 0.0;
  for (std::size_t i = 1; i < d.mu.size(); ++i) {
    const double piece = 0.5 * (d.mu[i] * d.density[i] + d.mu[i - 1] * d.density[i - 1]) *
                         std::log(d.mu[i] / d.mu[i - 1]);
    if (cdf + piece >= half && piece > 0.0) {
      const double f = (half - cdf) / piece;
      return std::exp(std::log(d.mu[i - 1]) + f * std::log(d.mu[i] / d.mu[i - 1]));
    }
    cdf += piece;
  }
  throw std::runtime_error("median lies outside the rate grid");
}

double tail_mass(const RateDensity& d, double mu_threshold) {
  double mass = d.point_mass && d.atom > mu_threshold ? 1.0 : 0.0;
  for (std::size_t i = 1; i < d.mu.size(); ++i) {
    if (d.mu[i] <= mu_threshold) continue;
    const double lo = std::max(d.mu[i - 1], mu_threshold);
    const double frac = std::log(d.mu[i] / lo) / std::log(d.mu[i] / d.mu[i - 1]);
    mass += frac * 0.5 * (d.mu[i] * d.density[i] + d.mu[i - 1] * d.density[i - 1]) *
            std::log(d.mu[i] / d.mu[i - 1]);
  }
  return mass;
}

double effective_diffusion(double tau_d_seconds, double r_c_nm) {
  if (!(tau_d_seconds > 0.0) || !(r_c_nm > 0.0))
    throw std::invalid_argument("diffusion estimate needs positive tau_d and r_C");
  return r_c_nm * r_c_nm / tau_d_seconds;
}

}  // namespace spindiff
