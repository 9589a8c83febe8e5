#include "spindiff/evolution.hpp"

#include <Eigen/Eigenvalues>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

namespace spindiff {

namespace {

void require_normalized(const StateVector& psi) {
  if (std::abs(psi.norm() - 1.0) > kNormTolerance)
    throw std::invalid_argument("initial state is not normalized (norm " +
                                std::to_string(psi.norm()) + ")");
}

void require_grid(const std::vector<double>& t_grid) {
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!(t_grid[i] >= 0.0)) throw std::invalid_argument("time grid must be non-negative");
    if (i && t_grid[i] < t_grid[i - 1])
      throw std::invalid_argument("time grid must be non-decreasing");
  }
}

}  // namespace

StateVector basis_state(int n_sites, basis::Index index) {
  StateVector psi = StateVector::Zero(static_cast<Eigen::Index>(basis::dimension(n_sites)));
  psi(static_cast<Eigen::Index>(index)) = 1.0;
  return psi;
}

basis::Index basis_index(const std::vector<int>& bits) {
  basis::Index idx = 0;
  for (int b : bits) idx = (idx << 1) | (b ? 1u : 0u);
  return idx;
}

ExactPropagator::ExactPropagator(const Eigen::MatrixXcd& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  energies_ = es.eigenvalues();
  vectors_ = es.eigenvectors();
}

StateVector ExactPropagator::evolve(const StateVector& psi0, double t) const {
  Eigen::VectorXcd c = vectors_.adjoint() * psi0;
  for (Eigen::Index k = 0; k < c.size(); ++k) c(k) *= std::polar(1.0, -energies_(k) * t);
  return vectors_ * c;
}

void exact_evolve(const SpinSystem& s, const StateVector& psi0, const std::vector<double>& t_grid,
                  const StateObserver& observe) {
  if (psi0.size() != static_cast<Eigen::Index>(s.dim()))
    throw std::invalid_argument("state dimension does not match the system");
  require_normalized(psi0);
  require_grid(t_grid);
  ExactPropagator prop(to_matrix(s));
  for (std::size_t k = 0; k < t_grid.size(); ++k) observe(k, t_grid[k], prop.evolve(psi0, t_grid[k]));
}

std::vector<StateVector> exact_propagate(const SpinSystem& s, const StateVector& psi0,
                                         const std::vector<double>& t_grid) {
  std::vector<StateVector> out;
  out.reserve(t_grid.size());
  exact_evolve(s, psi0, t_grid, [&](std::size_t, double, const StateVector& psi) { out.push_back(psi); });
  return out;
}

double SuzukiCoefficients::p() { return 1.0 / (4.0 - std::cbrt(4.0)); }

std::array<double, 5> SuzukiCoefficients::stages() {
  const double q = p();
  return {q, q, 1.0 - 4.0 * q, q, q};
}

TrotterPlan::TrotterPlan(const SpinSystem& s, TrotterOptions opts) : n_(s.size()), opts_(opts) {
  if (!(opts_.dt > 0.0)) throw std::invalid_argument("Trotter step must be positive");
  const auto dim = static_cast<Eigen::Index>(s.dim());
  for (const auto& term : s.terms()) {
    if (!std::holds_alternative<terms::Zeeman>(term))
      max_rate_ = std::max(max_rate_, std::abs(coefficient(term)));
    if (is_diagonal(term)) {
      if (coefficient(term) == 0.0) continue;
      if (!has_diagonal_) diagonal_ = Eigen::VectorXd::Zero(dim);
      has_diagonal_ = true;
      continue;
    }
    if (auto* t = std::get_if<terms::LocalTransverse>(&term)) {
      if (t->omega_x != 0.0) pairs_.push_back({PairKernel::rotation, t->site, t->site, 0.5 * t->omega_x});
    } else if (auto* t = std::get_if<terms::HyperfinePseudosecular>(&term)) {
      if (t->a_zx != 0.0)
        pairs_.push_back({PairKernel::conditional, t->electron, t->nucleus, 0.25 * t->a_zx});
    } else if (auto* t = std::get_if<terms::ElectronFlipFlop>(&term)) {
      if (t->j_d != 0.0) pairs_.push_back({PairKernel::flip_flop, t->first, t->second, 0.5 * t->j_d});
    } else if (auto* t = std::get_if<terms::NuclearXY>(&term)) {
      if (t->j_xy != 0.0)
        pairs_.push_back({PairKernel::flip_flop, t->first, t->second, 0.5 * t->j_xy});
    } else {
      throw std::invalid_argument("term has no Trotter kernel: " + describe(term));
    }
  }
  if (has_diagonal_) {
    const int n = n_;
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < dim; ++i) {
      double e = 0.0;
      for (const auto& term : s.terms())
        if (is_diagonal(term))
          for_each_element(term, n, static_cast<basis::Index>(i),
                           [&](basis::Index, double v) { e += v; });
      diagonal_(i) = e;
    }
  }
  // A Zeeman field that commutes with every kernel splits off exactly and does
  // not bound the step (the electron Zeeman in the four-spin cluster). That holds
  // when the site is only touched by flip-flops with an equal-field partner.
  std::vector<double> zeeman(static_cast<std::size_t>(n_), 0.0);
  for (const auto& term : s.terms())
    if (auto* z = std::get_if<terms::Zeeman>(&term)) zeeman[z->site] += z->sign * z->omega;
  std::vector<bool> commutes(static_cast<std::size_t>(n_), true);
  for (const auto& k : pairs_) {
    if (k.kind == PairKernel::flip_flop) {
      if (zeeman[k.a] != zeeman[k.b]) commutes[k.a] = commutes[k.b] = false;
    } else {
      commutes[k.b] = false;  // rotated site; a conditional control keeps its Sz
    }
  }
  for (int i = 0; i < n_; ++i)
    if (!commutes[i]) max_rate_ = std::max(max_rate_, std::abs(zeeman[i]));
  build_sequence();
  if (!opts_.override_step_guard && max_rate_ > 0.0 && opts_.dt >= step_limit())
    throw std::invalid_argument("Trotter step " + std::to_string(opts_.dt) +
                                " s is not below the shortest local timescale " +
                                std::to_string(step_limit()) +
                                " s; reduce dt or set override_step_guard");
}

double TrotterPlan::step_limit() const {
  return max_rate_ > 0.0 ? 1.0 / max_rate_ : std::numeric_limits<double>::infinity();
}

void TrotterPlan::apply_diagonal(StateVector& psi, double h) {
  if (!has_diagonal_) return;
  const Eigen::VectorXcd* phase = nullptr;
  for (const auto& [key, vec] : phase_cache_)
    if (key == h) phase = &vec;
  if (!phase) {
    Eigen::VectorXcd v(diagonal_.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = kernels::phase_delta(-diagonal_(i) * h);
    // Only a handful of distinct fractional steps occur; bound the cache anyway.
    if (phase_cache_.size() >= 8) phase_cache_.erase(phase_cache_.begin());
    phase_cache_.emplace_back(h, std::move(v));
    phase = &phase_cache_.back().second;
  }
  kernels::apply_phase(opts_.backend, {psi.data(), static_cast<std::size_t>(psi.size())},
                       {phase->data(), static_cast<std::size_t>(phase->size())});
}

void TrotterPlan::build_sequence() {
  std::vector<Op> raw;
  const int m = static_cast<int>(pairs_.size());
  for (double w : SuzukiCoefficients::stages()) {
    if (m == 0) {
      raw.push_back({-1, w});
      continue;
    }
    // symmetric Strang: D/2, P1/2 .. P(m-1)/2, Pm, P(m-1)/2 .. P1/2, D/2
    if (has_diagonal_) raw.push_back({-1, 0.5 * w});
    for (int i = 0; i + 1 < m; ++i) raw.push_back({i, 0.5 * w});
    raw.push_back({m - 1, w});
    for (int i = m - 2; i >= 0; --i) raw.push_back({i, 0.5 * w});
    if (has_diagonal_) raw.push_back({-1, 0.5 * w});
  }
  sequence_.clear();
  for (const Op& op : raw) {
    if (!sequence_.empty() && sequence_.back().kernel == op.kernel)
      sequence_.back().weight += op.weight;
    else
      sequence_.push_back(op);
  }
}

void TrotterPlan::apply_pair(StateVector& psi, const PairKernel& k, double tau) {
  std::span<cplx> v(psi.data(), static_cast<std::size_t>(psi.size()));
  const double theta = k.rate * tau;
  switch (k.kind) {
    case PairKernel::rotation: kernels::apply_rotation_x(opts_.backend, v, n_, k.a, theta); break;
    case PairKernel::conditional:
      kernels::apply_conditional_rotation_x(opts_.backend, v, n_, k.a, k.b, theta);
      break;
    case PairKernel::flip_flop: kernels::apply_flip_flop(opts_.backend, v, n_, k.a, k.b, theta); break;
  }
}

void TrotterPlan::step(StateVector& psi, double h) {
  for (const Op& op : sequence_) {
    if (op.kernel < 0) apply_diagonal(psi, op.weight * h);
    else apply_pair(psi, pairs_[static_cast<std::size_t>(op.kernel)], op.weight * h);
  }
}

void TrotterPlan::advance(StateVector& psi, double duration) {
  if (duration <= 0.0) return;
  const auto steps = static_cast<long long>(std::ceil(duration / opts_.dt - 1e-9));
  const double h = duration / static_cast<double>(std::max(1LL, steps));
  for (long long k = 0; k < std::max(1LL, steps); ++k) step(psi, h);
}

void ts4_evolve(const SpinSystem& s, const StateVector& psi0, const std::vector<double>& t_grid,
                const TrotterOptions& opts, const StateObserver& observe) {
  if (psi0.size() != static_cast<Eigen::Index>(s.dim()))
    throw std::invalid_argument("state dimension does not match the system");
  require_normalized(psi0);
  require_grid(t_grid);
  TrotterPlan plan(s, opts);
  StateVector psi = psi0;
  double t = 0.0;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    plan.advance(psi, t_grid[k] - t);
    t = t_grid[k];
    observe(k, t, psi);
  }
}

std::vector<StateVector> ts4_propagate(const SpinSystem& s, const StateVector& psi0,
                                       const std::vector<double>& t_grid,
                                       const TrotterOptions& opts) {
  std::vector<StateVector> out;
  out.reserve(t_grid.size());
  ts4_evolve(s, psi0, t_grid, opts, [&](std::size_t, double, const StateVector& psi) { out.push_back(psi); });
  return out;
}

StepSelection select_time_step(const SpinSystem& s, const StateVector& psi0,
                               const std::vector<double>& t_grid, double tol,
                               KernelBackend backend, int max_halvings) {
  if (t_grid.empty()) throw std::invalid_argument("empty time grid");
  std::vector<int> sites(s.size());
  for (int i = 0; i < s.size(); ++i) sites[i] = i;

  auto run = [&](double dt) {
    std::vector<double> obs;
    ts4_evolve(s, psi0, t_grid, {dt, false, backend},
               [&](std::size_t, double, const StateVector& psi) {
                 auto p = measure_polarization(psi, s.size(), sites, backend);
                 obs.insert(obs.end(), p.begin(), p.end());
               });
    return obs;
  };

  TrotterPlan probe(s, {1.0, true, backend});
  double dt = std::isfinite(probe.step_limit()) ? 0.5 * probe.step_limit() : t_grid.back() / 16.0;
  if (!(dt > 0.0)) dt = 1e-9;
  auto coarse = run(dt);
  StepSelection sel;
  for (int h = 0; h <= max_halvings; ++h) {
    auto fine = run(0.5 * dt);
    double dev = 0.0;
    for (std::size_t i = 0; i < fine.size(); ++i) dev = std::max(dev, std::abs(fine[i] - coarse[i]));
    sel = {0.5 * dt, dev, h + 1};
    if (dev <= tol) return sel;
    dt *= 0.5;
    coarse = std::move(fine);
  }
  throw std::runtime_error("step doubling did not reach tolerance " + std::to_string(tol) +
                           " (last deviation " + std::to_string(sel.deviation) + ")");
}

std::vector<double> measure_polarization(const StateVector& psi, int n_sites,
                                         const std::vector<int>& sites, KernelBackend backend) {
  std::vector<double> out;
  out.reserve(sites.size());
  std::span<const cplx> v(psi.data(), static_cast<std::size_t>(psi.size()));
  for (int site : sites) {
    if (site < 0 || site >= n_sites) throw std::invalid_argument("site index out of range");
    out.push_back(kernels::polarization(backend, v, n_sites, site));
  }
  return out;
}

std::vector<double> measure_groups(const StateVector& psi, int n_sites,
                                   const std::vector<std::vector<int>>& groups,
                                   KernelBackend backend) {
  std::vector<double> out;
  for (const auto& g : groups) {
    double sum = 0.0;
    for (double p : measure_polarization(psi, n_sites, g, backend)) sum += p;
    out.push_back(sum);
  }
  return out;
}

StateVector random_bath_state(int n_sites, int polarized_site, std::uint64_t seed) {
  if (polarized_site < 0 || polarized_site >= n_sites)
    throw std::invalid_argument("polarized site out of range");
  const basis::Index dim = basis::dimension(n_sites);
  const basis::Index mask = basis::site_mask(n_sites, polarized_site);
  StateVector psi = StateVector::Zero(static_cast<Eigen::Index>(dim));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (basis::Index i = 0; i < dim; ++i) {
    if (i & mask) continue;
    const double re = normal(rng);
    const double im = normal(rng);
    psi(static_cast<Eigen::Index>(i)) = {re, im};
  }
  if (n_sites == 1) psi(0) = 1.0;
  psi /= psi.norm();
  return psi;
}

double energy_expectation(const SpinSystem& s, const StateVector& psi) {
  const int n = s.size();
  const auto dim = static_cast<Eigen::Index>(s.dim());
  StateVector hpsi = StateVector::Zero(dim);
  for (Eigen::Index col = 0; col < dim; ++col) {
    if (psi(col) == cplx(0.0)) continue;
    for (const auto& term : s.terms())
      for_each_element(term, n, static_cast<basis::Index>(col), [&](basis::Index row, double v) {
        hpsi(static_cast<Eigen::Index>(row)) += v * psi(col);
      });
  }
  return psi.dot(hpsi).real();
}

namespace {
constexpr char kMagic[8] = {'S', 'P', 'D', 'S', 'T', 'A', 'T', 'E'};

template <class T>
void put_le(std::ostream& os, T value) {
  static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes little-endian");
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}
template <class T>
T get_le(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw std::runtime_error("truncated state snapshot");
  return value;
}
}  // namespace

void save_snapshot(std::ostream& os, const StateVector& psi, int n_sites) {
  os.write(kMagic, sizeof kMagic);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(n_sites));
  put_le<std::uint64_t>(os, static_cast<std::uint64_t>(psi.size()));
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    put_le<double>(os, psi(i).real());
    put_le<double>(os, psi(i).imag());
  }
}

StateVector load_snapshot(std::istream& is, int* n_sites) {
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw std::runtime_error("not a state snapshot");
  const auto n = get_le<std::uint32_t>(is);
  const auto len = get_le<std::uint64_t>(is);
  if (len != basis::dimension(static_cast<int>(n)))
    throw std::runtime_error("snapshot length does not match its site count");
  StateVector psi(static_cast<Eigen::Index>(len));
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    const double re = get_le<double>(is);
    const double im = get_le<double>(is);
    psi(i) = {re, im};
  }
  if (n_sites) *n_sites = static_cast<int>(n);
  return psi;
}

}  // namespace spindiff
