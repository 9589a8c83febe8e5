#include "spindiff/chain.hpp"

#include <cmath>
#include <stdexcept>

namespace spindiff {

void RateChain::validate() const {
  if (m < 2) throw std::invalid_argument("chain needs at least two boxes");
  const auto links = static_cast<std::size_t>(m - 1);
  if (gamma_fwd.size() != links || gamma_bwd.size() != links)
    throw std::invalid_argument("chain needs m - 1 forward and backward rates");
  if (beta.size() != static_cast<std::size_t>(m))
    throw std::invalid_argument("chain needs one loss rate per box");
  for (double g : gamma_fwd)
    if (!(g >= 0.0)) throw std::invalid_argument("chain rates must be non-negative");
  for (double g : gamma_bwd)
    if (!(g >= 0.0)) throw std::invalid_argument("chain rates must be non-negative");
  for (double b : beta)
    if (!(b >= 0.0)) throw std::invalid_argument("chain losses must be non-negative");
  if (k < 1 || k > m) throw std::invalid_argument("RF box must lie in 1..m");
  if (!(a_rf >= 0.0)) throw std::invalid_argument("RF sink rate must be non-negative");
  if (q0.size() != m) throw std::invalid_argument("initial charges need m entries");
  for (Eigen::Index i = 0; i < q0.size(); ++i)
    if (!std::isfinite(q0(i)) || q0(i) < 0.0)
      throw std::invalid_argument("initial charges must be finite and non-negative");
}

RateChain RateChain::from_rates(const std::vector<double>& rates, int k, double a_rf) {
  RateChain c;
  c.m = static_cast<int>(rates.size()) + 1;
  c.gamma_fwd = rates;
  c.gamma_bwd = rates;
  c.beta.assign(c.m, 0.0);
  c.k = k;
  c.a_rf = a_rf;
  c.q0 = Eigen::VectorXd::Zero(c.m);
  c.q0(0) = 1.0;
  c.validate();
  return c;
}

RateChain RateChain::uniform(int m, double gamma0, int k, double a_rf) {
  if (m < 2) throw std::invalid_argument("chain needs at least two boxes");
  return from_rates(std::vector<double>(m - 1, gamma0), k, a_rf);
}

Eigen::MatrixXd rate_matrix(const RateChain& c, bool rf_on) {
  c.validate();
  const int m = c.m;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i + 1 < m; ++i) {
    a(i + 1, i) += c.gamma_fwd[i];
    a(i, i) -= c.gamma_fwd[i];
    if (i + 1 < m - 1) {  // the last box does not flow back
      a(i, i + 1) += c.gamma_bwd[i];
      a(i + 1, i + 1) -= c.gamma_bwd[i];
    }
  }
  for (int i = 0; i < m; ++i) a(i, i) -= c.beta[i];
  if (rf_on) a(c.k - 1, c.k - 1) -= c.a_rf;
  return a;
}

void PulseTrain::validate() const {
  if (!(tau > 0.0) || !(tau_rf > 0.0)) throw std::invalid_argument("pulse timings must be positive");
  if (!(total > 0.0)) throw std::invalid_argument("total time must be positive");
  if (pulses() < 1) throw std::invalid_argument("pulse train fits no composite interval in T");
}

long PulseTrain::pulses() const { return static_cast<long>(std::floor(total / (tau + tau_rf))); }

double PulseTrain::remainder() const {
  return std::max(0.0, total - static_cast<double>(pulses()) * (tau + tau_rf));
}

Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
  // Scaling and squaring carried on E = exp(B) - I, with (I + E)^2 - I = 2E + E^2,
  // in extended precision. Stiff chains need ~30 squarings and the doubling
  // otherwise lifts column-sum roundoff above 1e-12.
  using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = a.rows();
  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
  if (!std::isfinite(norm)) throw std::runtime_error("matrix exponential of a non-finite matrix");
  int squarings = 0;
  if (norm > 0.25) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.25)));
  const MatL b = std::ldexp(1.0L, -squarings) * a.cast<long double>();
  const MatL id = MatL::Identity(n, n);
  // 0.25^17 / 17! is below long double rounding.
  MatL p = id;
  for (int k = 17; k >= 2; --k) p = id + b * p / static_cast<long double>(k);
  MatL e = b * p;
  for (int i = 0; i < squarings; ++i) e = (2.0L * e + e * e).eval();
  Eigen::MatrixXd out = (id + e).cast<double>();
  if (!out.allFinite()) throw std::runtime_error("matrix exponential did not converge");
  return out;
}

Eigen::VectorXd evolve_free(const RateChain& c, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("evolution time must be non-negative");
  return expm(rate_matrix(c, false) * t) * c.q0;
}

Eigen::VectorXd evolve_pulse_train(const RateChain& c, const PulseTrain& p,
                                   std::vector<Eigen::VectorXd>* trajectory) {
  p.validate();
  const Eigen::MatrixXd a0 = rate_matrix(c, false);
  const Eigen::MatrixXd a1 = rate_matrix(c, true);
  const Eigen::MatrixXd step = expm(a0 * p.tau) * expm(a1 * p.tau_rf);
  Eigen::VectorXd q = c.q0;
  for (long n = 0; n < p.pulses(); ++n) {
    q = step * q;
    if (trajectory) trajectory->push_back(q);
  }
  if (p.remainder() > 0.0) q = expm(a0 * p.remainder()) * q;
  return q;
}

std::vector<double> gaussian_profile(int m, double gamma0, double k0, double width, double factor) {
  if (m < 2) throw std::invalid_argument("chain needs at least two boxes");
  if (k0 < 1.0 || k0 > m) throw std::invalid_argument("profile center must lie in 1..m");
  if (!(width > 0.0)) throw std::invalid_argument("profile width must be positive");
  std::vector<double> rates;
  for (int i = 1; i < m; ++i) {
    const double z = (k0 - i) / width;
    rates.push_back(gamma0 + factor * gamma0 * std::exp(-z * z));
  }
  return rates;
}

TauSweep tau_sweep(const RateChain& c, const std::vector<double>& taus, const PulseTrain& templ,
                   bool fit) {
  if (taus.empty()) throw std::invalid_argument("empty delay grid");
  TauSweep out;
  out.tau = taus;
  const double baseline = evolve_free(c, templ.total)(c.m - 1);
  if (!(baseline > 0.0)) throw std::runtime_error("end box receives no magnetization without RF");
  out.q_no_rf.assign(taus.size(), baseline);
  out.q_rf.resize(taus.size());
  out.contrast.resize(taus.size());
  out.normalized.resize(taus.size());
  const auto n = static_cast<long long>(taus.size());
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < n; ++i) {
    PulseTrain p = templ;
    p.tau = taus[i];
    out.q_rf[i] = evolve_pulse_train(c, p)(c.m - 1);
  }
  for (std::size_t i = 0; i < taus.size(); ++i) {
    out.contrast[i] = baseline - out.q_rf[i];
    out.normalized[i] = out.q_rf[i] / baseline;
  }
  if (fit) {
    try {
      out.fit = fit_stretched(out.tau, out.normalized);
    } catch (const std::exception& e) {
      out.fit_error = e.what();
    }
  }
  return out;
}

std::vector<double> default_tau_grid() { return log_grid(1e-4, std::pow(10.0, -0.5), 41); }

}  // namespace spindiff
