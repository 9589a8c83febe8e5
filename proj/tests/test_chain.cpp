#include "doctest.h"

#include <boost/numeric/odeint.hpp>
#include <unsupported/Eigen/MatrixFunctions>
#include <cmath>
#include <random>

#include "spindiff/chain.hpp"

using namespace spindiff;

namespace {

// Independent reference: adaptive Dormand-Prince on dq/dt = A q.
Eigen::VectorXd ode_reference(const Eigen::MatrixXd& a, const Eigen::VectorXd& q0, double t) {
  namespace ode = boost::numeric::odeint;
  using State = std::vector<double>;
  State q(q0.data(), q0.data() + q0.size());
  auto rhs = [&](const State& x, State& dx, double) {
    const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
    Eigen::Map<Eigen::VectorXd>(dx.data(), static_cast<Eigen::Index>(dx.size())) = a * xv;
  };
  ode::integrate_adaptive(ode::make_controlled(1e-13, 1e-13, ode::runge_kutta_dopri5<State>()), rhs, q,
                          0.0, t, t * 1e-4);
  return Eigen::Map<Eigen::VectorXd>(q.data(), static_cast<Eigen::Index>(q.size()));
}

RateChain random_chain(int m, std::uint64_t seed, bool losses) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RateChain c;
  c.m = m;
  for (int i = 0; i + 1 < m; ++i) {
    c.gamma_fwd.push_back(1e3 * std::pow(10.0, 2.0 * u(rng) - 1.0));
    c.gamma_bwd.push_back(1e3 * std::pow(10.0, 2.0 * u(rng) - 1.0));
  }
  for (int i = 0; i < m; ++i) c.beta.push_back(losses ? 50.0 * u(rng) : 0.0);
  c.k = 1 + static_cast<int>(u(rng) * m) % m;
  c.a_rf = 1e5;
  c.q0 = Eigen::VectorXd::Zero(m);
  c.q0(0) = 1.0;
  return c;
}

}  // namespace

TEST_CASE("rate matrix structure") {
  SUBCASE("two boxes with an absorbing end") {
    const auto a = rate_matrix(RateChain::uniform(2, 7.0, 1, 0.0), false);
    CHECK(a(0, 0) == -7.0);
    CHECK(a(0, 1) == 0.0);
    CHECK(a(1, 0) == 7.0);
    CHECK(a(1, 1) == 0.0);
  }
  SUBCASE("RF only touches the irradiated diagonal") {
    const auto c = random_chain(8, 1, true);
    const Eigen::MatrixXd d = rate_matrix(c, true) - rate_matrix(c, false);
    CHECK(d(c.k - 1, c.k - 1) == -c.a_rf);
    CHECK(d.cwiseAbs().sum() == c.a_rf);
  }
  SUBCASE("lossless columns sum to zero") {
    for (int s = 0; s < 10; ++s) {
      const auto a = rate_matrix(random_chain(12, s, false), false);
      CHECK(a.colwise().sum().cwiseAbs().maxCoeff() <= 1e-12 * a.cwiseAbs().maxCoeff());
      for (Eigen::Index i = 0; i < 12; ++i)
        for (Eigen::Index j = 0; j < 12; ++j)
          if (i != j) CHECK(a(i, j) >= 0.0);
    }
  }
  SUBCASE("invalid chains") {
    auto c = RateChain::uniform(4, 1.0, 2, 1.0);
    c.k = 5;
    CHECK_THROWS(c.validate());
    c = RateChain::uniform(4, 1.0, 2, 1.0);
    c.gamma_fwd[1] = -1.0;
    CHECK_THROWS(c.validate());
    CHECK_THROWS(RateChain::uniform(4, 1.0, 2, -1.0));
  }
}

TEST_CASE("matrix exponential against an adaptive ODE solver") {
  for (int s = 0; s < 6; ++s) {
    const int m = 3 + s;
    const auto c = random_chain(m, 10 + s, s % 2 == 1);
    for (bool rf : {false, true}) {
      const Eigen::MatrixXd a = rate_matrix(c, rf);
      for (double t : {1e-4, 3e-3, 0.05}) {
        const Eigen::VectorXd ours = expm(a * t) * c.q0;
        const Eigen::VectorXd ref = ode_reference(a, c.q0, t);
        CHECK((ours - ref).cwiseAbs().maxCoeff() <= 1e-8);
      }
    }
  }
}

TEST_CASE("matrix exponential against Eigen's implementation") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  for (double scale : {1e-3, 1.0, 30.0}) {
    Eigen::MatrixXd a(6, 6);
    for (Eigen::Index i = 0; i < 36; ++i) a.data()[i] = scale * g(rng);
    const Eigen::MatrixXd ref = a.exp();
    CHECK((expm(a) - ref).norm() <= 1e-11 * std::max(1.0, ref.norm()));
  }
  CHECK((expm(Eigen::MatrixXd::Zero(3, 3)) - Eigen::MatrixXd::Identity(3, 3)).norm() == 0.0);
}

TEST_CASE("pulse-train evolution properties") {
  SUBCASE("conservation without sinks") {
    auto c = RateChain::uniform(40, 1e3, 20, 0.0);
    const auto q = evolve_pulse_train(c, {3e-3, 1e-3, 1.0});
    CHECK(std::abs(q.sum() - 1.0) <= 1e-12);
  }
  SUBCASE("charges stay non-negative and total charge never grows") {
    for (int s = 0; s < 5; ++s) {
      const auto c = random_chain(15, 30 + s, true);
      std::vector<Eigen::VectorXd> traj;
      evolve_pulse_train(c, {2e-3, 1e-3, 0.2}, &traj);
      double prev = c.q0.sum();
      for (const auto& q : traj) {
        CHECK(q.minCoeff() >= -1e-12);
        CHECK(q.sum() <= prev + 1e-12);
        prev = q.sum();
      }
    }
  }
  SUBCASE("absorbing end fills monotonically") {
    const auto c = RateChain::uniform(10, 1e3, 5, 0.0);
    double prev = 0.0;
    for (double t : {1e-3, 5e-3, 2e-2, 0.1, 0.5, 2.0, 10.0}) {
      const double qm = evolve_free(c, t)(9);
      CHECK(qm >= prev - 1e-14);
      prev = qm;
    }
    CHECK(prev == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("pulse bookkeeping") {
    const PulseTrain p{2e-3, 1e-3, 1.0};
    CHECK(p.pulses() == 333);
    CHECK(p.remainder() == doctest::Approx(1e-3).epsilon(1e-9));
    CHECK_THROWS(PulseTrain{0.0, 1e-3, 1.0}.validate());
    CHECK_THROWS(PulseTrain{2.0, 1e-3, 1.0}.validate());
  }
  SUBCASE("long delays approach the undriven value") {
    const auto c = RateChain::uniform(10, 1e3, 5, 1e6);
    const double free = evolve_free(c, 1.0)(9);
    const double driven = evolve_pulse_train(c, {0.499, 1e-3, 1.0})(9);
    CHECK(driven <= free);
    CHECK(driven > 0.8 * free);
    CHECK(evolve_pulse_train(c, {1e-4, 1e-3, 1.0})(9) < driven);
  }
}

TEST_CASE("Gaussian coupling profile") {
  const auto g = gaussian_profile(40, 10.0);
  REQUIRE(g.size() == 39);
  CHECK(g[14] == doctest::Approx(1010.0).epsilon(1e-14));  // link i = k0 = 15
  CHECK(g[13] == g[15]);
  CHECK(g[0] == doctest::Approx(10.0).epsilon(1e-9));
  for (double v : gaussian_profile(40, 10.0, 15.0, 2.0, 0.0)) CHECK(v == 10.0);
  CHECK_THROWS(gaussian_profile(40, 10.0, 15.0, 0.0));
  CHECK_THROWS(gaussian_profile(40, 10.0, 41.0));
}

TEST_CASE("tau sweeps give a sigmoid") {
  std::vector<double> taus;
  for (int i = 0; i <= 24; ++i) taus.push_back(std::pow(10.0, -4.0 + 3.5 * i / 24));
  const PulseTrain templ{0.0, 1e-3, 1.0};
  double prev_tau_d = 1e300;
  // Below ~3 kHz the fitted tau_d barely moves with the rate (slow chains are
  // limited by T), so only a clearly faster chain is compared here.
  for (double g0 : {1e3, 1e4}) {
    const auto sw = tau_sweep(RateChain::uniform(40, g0, 20, 1e6), taus, templ);
    for (std::size_t i = 1; i < taus.size(); ++i) CHECK(sw.q_rf[i] >= sw.q_rf[i - 1] - 1e-12);
    for (std::size_t i = 0; i < taus.size(); ++i) {
      CHECK(sw.contrast[i] == doctest::Approx(sw.q_no_rf[i] - sw.q_rf[i]));
      CHECK(sw.contrast[i] >= -1e-12);
    }
    REQUIRE(sw.fit.has_value());
    CHECK(sw.fit->tau_d < prev_tau_d);
    prev_tau_d = sw.fit->tau_d;
  }
  CHECK(default_tau_grid().size() == 41);
  CHECK(default_tau_grid().front() == doctest::Approx(1e-4));
  CHECK(default_tau_grid().back() == doctest::Approx(std::pow(10.0, -0.5)));
}
