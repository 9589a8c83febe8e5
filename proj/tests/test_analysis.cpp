#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "spindiff/analysis.hpp"

using namespace spindiff;

namespace {

std::vector<double> model_curve(const std::vector<double>& tau, double s0, double s1, double tau_d, double eps) {
  std::vector<double> s;
  for (double t : tau) s.push_back(stretched_model(t, s0, s1, tau_d, eps));
  return s;
}

// Density of exp(-sqrt(tau / tau_d)): a Levy law in mu.
double levy_density(double mu, double tau_d) {
  const double a = 1.0 / tau_d;
  return std::sqrt(a) / (2.0 * std::sqrt(M_PI) * std::pow(mu, 1.5)) * std::exp(-a / (4.0 * mu));
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return 0.5 * (v[(v.size() - 1) / 2] + v[v.size() / 2]);
}

}  // namespace

TEST_CASE("log grid and model") {
  const auto g = log_grid(1e-3, 1e2, 6);
  REQUIRE(g.size() == 6);
  CHECK(g.front() == 1e-3);
  CHECK(g.back() == doctest::Approx(1e2).epsilon(1e-15));
  CHECK(g[2] == doctest::Approx(1e-1).epsilon(1e-14));
  CHECK(stretched_model(0.0, 2.0, 1.5, 1.0, 0.7) == 0.5);
  CHECK(stretched_model(1.0, 0.0, -1.0, 1.0, 0.3) == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("fit recovers a clean exponential") {
  const auto tau = log_grid(1e-4, 1.0, 41);
  const auto fit = fit_stretched(tau, model_curve(tau, 1.0, 0.9, 0.02, 1.0));
  CHECK(fit.converged);
  CHECK(fit.tau_d == doctest::Approx(0.02).epsilon(1e-6));
  CHECK(std::abs(fit.epsilon - 1.0) <= 1e-4);
  CHECK(fit.residual_rms <= 1e-8);
}

TEST_CASE("fit is idempotent on its own curve") {
  const auto tau = log_grid(1e-4, 1.0, 41);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> noise(0.0, 0.01);
  auto s = model_curve(tau, 1.0, 1.0, 3e-3, 0.7);
  for (auto& v : s) v += noise(rng);
  const auto a = fit_stretched(tau, s);
  const auto b = fit_stretched(tau, model_curve(tau, a.s0, a.s1, a.tau_d, a.epsilon));
  CHECK(b.tau_d == doctest::Approx(a.tau_d).epsilon(1e-8));
  CHECK(b.epsilon == doctest::Approx(a.epsilon).epsilon(1e-8));
  CHECK(b.s0 == doctest::Approx(a.s0).epsilon(1e-8));
  CHECK(b.s1 == doctest::Approx(a.s1).epsilon(1e-8));
}

TEST_CASE("fit recovery under 1% noise over 100 seeds") {
  const auto tau = log_grid(1e-4, 1.0, 41);
  const auto clean = model_curve(tau, 1.0, 1.0, 3e-3, 0.7);
  std::vector<double> tds, eps;
  for (int seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    std::normal_distribution<double> noise(0.0, 0.01);
    auto s = clean;
    for (auto& v : s) v += noise(rng);
    const auto fit = fit_stretched(tau, s);
    tds.push_back(fit.tau_d);
    eps.push_back(fit.epsilon);
  }
  CHECK(std::abs(median_of(tds) - 3e-3) <= 0.05 * 3e-3);
  CHECK(std::abs(median_of(eps) - 0.7) <= 0.05);
}

TEST_CASE("two well separated exponentials fit with eps below one") {
  const auto tau = log_grid(1e-4, 10.0, 61);
  std::vector<double> s;
  for (double t : tau) s.push_back(1.0 - 0.5 * std::exp(-t / 1e-3) - 0.5 * std::exp(-t / 1e-1));
  const auto fit = fit_stretched(tau, s);
  CHECK(fit.epsilon < 0.7);
  CHECK(fit.tau_d > 1e-3);
  CHECK(fit.tau_d < 1e-1);
}

TEST_CASE("fit input validation") {
  CHECK_THROWS(fit_stretched({1.0, 2.0}, {1.0, 2.0}));
  CHECK_THROWS(fit_stretched({1.0, 2.0, 3.0, 4.0, 5.0}, {1.0, 2.0}));
}

TEST_CASE("stable density") {
  SUBCASE("Levy closed form at alpha = 1/2") {
    for (double x : {0.01, 0.05, 0.2, 1.0, 4.0, 30.0}) {
      // exp(-s^(1/2)) is the tau_d = 1 case.
      CHECK(stable_density(x, 0.5) == doctest::Approx(levy_density(x, 1.0)).epsilon(1e-10));
    }
  }
  SUBCASE("normalized and positive") {
    for (double alpha : {0.6, 0.8, 0.95}) {
      const auto d = inverse_laplace_stretched(1.0, alpha, default_rate_grid(1.0, alpha));
      CHECK(d.normalization == doctest::Approx(1.0).epsilon(1e-6));
      CHECK(*std::min_element(d.density.begin(), d.density.end()) >= 0.0);
    }
  }
  CHECK_THROWS(stable_density(1.0, 1.2));
}

TEST_CASE("inverse Laplace closed form at eps = 1/2") {
  const double tau_d = 3e-3;
  const auto grid = default_rate_grid(tau_d, 0.5);
  const auto d = inverse_laplace_stretched(tau_d, 0.5, grid);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double ref = levy_density(grid[i], tau_d);
    if (ref > 1e-12 * levy_density(1.0 / (6.0 * tau_d), tau_d))  // skip the far tails, peak sits at a/6
      worst = std::max(worst, std::abs(d.density[i] - ref) / ref);
  }
  CHECK(worst <= 1e-4);
  // P(mu > 1/tau_d) = erf(1/2) for the Levy law.
  CHECK(tail_mass(d, 1.0 / tau_d) == doctest::Approx(std::erf(0.5)).epsilon(1e-4));
}

TEST_CASE("Laplace duality reconstructs the stretched exponential") {
  for (double eps : {0.5, 0.6, 0.75, 0.9}) {
    const double tau_d = 2e-3;
    const auto d = inverse_laplace_stretched(tau_d, eps, default_rate_grid(tau_d, eps));
    for (double r : log_grid(1e-2, 10.0, 25)) {
      const double t = r * tau_d;
      CHECK(std::abs(laplace_forward(d, t) - std::exp(-std::pow(r, eps))) <= 1e-6);
    }
  }
}

TEST_CASE("rate medians") {
  SUBCASE("eps = 1 is a point mass at 1/tau_d") {
    const auto d = inverse_laplace_stretched(4e-3, 1.0, default_rate_grid(4e-3, 1.0));
    CHECK(d.point_mass);
    CHECK(density_median(d) == 1.0 / 4e-3);
  }
  SUBCASE("scale with 1/tau_d and stay within a factor two of it") {
    for (double eps : {0.6, 0.7, 0.8, 0.9, 0.95}) {
      const auto a = inverse_laplace_stretched(1.0, eps, default_rate_grid(1.0, eps));
      const auto b = inverse_laplace_stretched(5e-3, eps, default_rate_grid(5e-3, eps));
      const double ma = density_median(a), mb = density_median(b);
      CHECK(ma >= 0.5);
      CHECK(ma <= 2.0);
      CHECK(mb * 5e-3 == doctest::Approx(ma).epsilon(1e-4));
    }
  }
  SUBCASE("frozen reference medians") {
    // Independent Talbot inversion of exp(-s^eps) in high precision; eps = 1/2
    // from the Levy law, 1 / (4 erfcinv(1/2)^2).
    CHECK(density_median(inverse_laplace_stretched(1.0, 0.5, default_rate_grid(1.0, 0.5))) ==
          doctest::Approx(1.09905466915887).epsilon(2e-4));
    CHECK(density_median(inverse_laplace_stretched(1.0, 0.6, default_rate_grid(1.0, 0.6))) ==
          doctest::Approx(0.978736713394136).epsilon(2e-4));
    CHECK(density_median(inverse_laplace_stretched(1.0, 0.7, default_rate_grid(1.0, 0.7))) ==
          doctest::Approx(0.911340835119508).epsilon(2e-4));
    CHECK(density_median(inverse_laplace_stretched(1.0, 0.8, default_rate_grid(1.0, 0.8))) ==
          doctest::Approx(0.880208385610517).epsilon(2e-4));
    CHECK(density_median(inverse_laplace_stretched(1.0, 0.95, default_rate_grid(1.0, 0.95))) ==
          doctest::Approx(0.91397560855214).epsilon(2e-4));
  }
  SUBCASE("stretching beyond one is rejected") {
    CHECK_THROWS(inverse_laplace_stretched(1.0, 1.2, log_grid(0.1, 10.0, 20)));
    CHECK_THROWS(inverse_laplace_stretched(-1.0, 0.5, log_grid(0.1, 10.0, 20)));
  }
}

TEST_CASE("effective diffusion") {
  CHECK(effective_diffusion(1.0 / 600.0, 0.5) == doctest::Approx(150.0).epsilon(1e-12));
  CHECK(effective_diffusion(2.0 / 600.0, 0.5) == doctest::Approx(75.0).epsilon(1e-12));
  CHECK_THROWS(effective_diffusion(0.0, 0.5));
}
