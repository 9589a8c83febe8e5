#pragma once

// Exact (eigendecomposition) and fourth-order Trotter-Suzuki time evolution.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "spindiff/kernels.hpp"
#include "spindiff/spin_model.hpp"

namespace spindiff {

/// Amplitudes over the product basis documented in basis.hpp.
using StateVector = Eigen::VectorXcd;

inline constexpr double kNormTolerance = 1e-10;

/// Product state from a list of bits per site (0 = up).
StateVector basis_state(int n_sites, basis::Index index);
basis::Index basis_index(const std::vector<int>& bits);

/// exp(-iHt) with one eigendecomposition reused for every time.
class ExactPropagator {
 public:
  explicit ExactPropagator(const Eigen::MatrixXcd& h);
  StateVector evolve(const StateVector& psi0, double t) const;
  const Eigen::VectorXd& energies() const { return energies_; }
  const Eigen::MatrixXcd& vectors() const { return vectors_; }

 private:
  Eigen::VectorXd energies_;
  Eigen::MatrixXcd vectors_;
};

using StateObserver = std::function<void(std::size_t index, double t, const StateVector& psi)>;

void exact_evolve(const SpinSystem& s, const StateVector& psi0, const std::vector<double>& t_grid,
                  const StateObserver& observe);
std::vector<StateVector> exact_propagate(const SpinSystem& s, const StateVector& psi0,
                                         const std::vector<double>& t_grid);

struct TrotterOptions {
  double dt = 0.0;  ///< maximum step, s
  bool override_step_guard = false;
  KernelBackend backend = KernelBackend::openmp;
};

/// Suzuki fractal stage weights built on the symmetric Strang step.
struct SuzukiCoefficients {
  static double p();
  /// (p, p, 1 - 4p, p, p)
  static std::array<double, 5> stages();
};

/// Term list compiled into kernels. Diagonal terms are merged into one phase
/// vector; everything else becomes a pair rotation.
class TrotterPlan {
 public:
  TrotterPlan(const SpinSystem& s, TrotterOptions opts);

  /// Largest |coefficient| among terms that control the step bound.
  double max_rate() const { return max_rate_; }
  /// Step bound 1 / max_rate.
  double step_limit() const;
  const TrotterOptions& options() const { return opts_; }

  /// Advances psi by one fourth-order step of length h.
  void step(StateVector& psi, double h);
  /// Advances psi by `duration` in ceil(duration / dt) equal steps.
  void advance(StateVector& psi, double duration);

  int sites() const { return n_; }

 private:
  struct PairKernel {
    enum Kind { rotation, conditional, flip_flop } kind;
    int a;
    int b;
    double rate;  ///< theta = rate * h
  };
  // One step as (kernel, weight) pairs; kernel -1 is the diagonal phase.
  // Adjacent exponentials of the same term are merged, which is exact.
  struct Op {
    int kernel;
    double weight;
  };
  void build_sequence();
  void apply_pair(StateVector& psi, const PairKernel& k, double tau);
  void apply_diagonal(StateVector& psi, double h);

  int n_;
  TrotterOptions opts_;
  Eigen::VectorXd diagonal_;
  bool has_diagonal_ = false;
  std::vector<PairKernel> pairs_;
  double max_rate_ = 0.0;
  std::vector<Op> sequence_;
  std::vector<std::pair<double, Eigen::VectorXcd>> phase_cache_;
};

void ts4_evolve(const SpinSystem& s, const StateVector& psi0, const std::vector<double>& t_grid,
                const TrotterOptions& opts, const StateObserver& observe);
std::vector<StateVector> ts4_propagate(const SpinSystem& s, const StateVector& psi0,
                                       const std::vector<double>& t_grid,
                                       const TrotterOptions& opts);

struct StepSelection {
  double dt = 0.0;
  double deviation = 0.0;  ///< max observable change between dt and dt/2
  int halvings = 0;
};

/// Step doubling: start below the guard bound and halve until the maximum
/// polarization deviation between dt and dt/2 over the grid is within tol.
StepSelection select_time_step(const SpinSystem& s, const StateVector& psi0,
                               const std::vector<double>& t_grid, double tol = 1e-4,
                               KernelBackend backend = KernelBackend::openmp,
                               int max_halvings = 20);

/// 2 <I_i^z> per site.
std::vector<double> measure_polarization(const StateVector& psi, int n_sites,
                                         const std::vector<int>& sites,
                                         KernelBackend backend = KernelBackend::openmp);
/// Sum of 2 <I^z> over each group.
std::vector<double> measure_groups(const StateVector& psi, int n_sites,
                                   const std::vector<std::vector<int>>& groups,
                                   KernelBackend backend = KernelBackend::openmp);

/// |up> on `polarized_site` times a normalized complex Gaussian vector on the rest.
StateVector random_bath_state(int n_sites, int polarized_site, std::uint64_t seed);

/// <psi|H|psi> with H applied term by term (no dense matrix).
double energy_expectation(const SpinSystem& s, const StateVector& psi);

/// Snapshot layout: "SPDSTATE" magic, uint32 site count, uint64 length, then
/// little-endian interleaved (re, im) doubles.
void save_snapshot(std::ostream& os, const StateVector& psi, int n_sites);
StateVector load_snapshot(std::istream& is, int* n_sites = nullptr);

}  // namespace spindiff
