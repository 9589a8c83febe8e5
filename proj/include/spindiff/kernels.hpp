#pragma once

// Closed-form exponentials of one- and two-site terms applied in place to a
// state vector. Each kernel touches disjoint basis-state pairs, so the OpenMP
// variants produce bit-identical results to the serial reference.

#include <cmath>
#include <complex>
#include <span>

#include "spindiff/basis.hpp"

namespace spindiff {

using cplx = std::complex<double>;

enum class KernelBackend { serial, openmp };

namespace kernels {

/// Block size for deterministic reductions.
inline constexpr basis::Index kReductionChunk = 4096;

#define SPINDIFF_KERNEL_DECLS                                                                    \
  /* psi[i] *= 1 + delta[i], see phase_delta */                                                                       \
  void apply_phase(std::span<cplx> psi, std::span<const cplx> delta);                            \
  /* exp(-i theta sigma_x) on `site` */                                                          \
  void apply_rotation_x(std::span<cplx> psi, int n, int site, double theta);                     \
  /* exp(-i (+-theta) sigma_x) on `target`, + when `control` is up */                            \
  void apply_conditional_rotation_x(std::span<cplx> psi, int n, int control, int target,         \
                                    double theta);                                               \
  /* exp(-i theta sigma_x) inside the {|01>, |10>} pair of sites a, b */                         \
  void apply_flip_flop(std::span<cplx> psi, int n, int a, int b, double theta);                  \
  /* 2 <I_site^z> */                                                                             \
  double polarization(std::span<const cplx> psi, int n, int site);                               \
  double norm_squared(std::span<const cplx> psi);

namespace serial {
SPINDIFF_KERNEL_DECLS
}
namespace omp {
SPINDIFF_KERNEL_DECLS
}
#undef SPINDIFF_KERNEL_DECLS

inline void apply_phase(KernelBackend b, std::span<cplx> psi, std::span<const cplx> phase) {
  b == KernelBackend::serial ? serial::apply_phase(psi, phase) : omp::apply_phase(psi, phase);
}
inline void apply_rotation_x(KernelBackend b, std::span<cplx> psi, int n, int site, double theta) {
  b == KernelBackend::serial ? serial::apply_rotation_x(psi, n, site, theta)
                             : omp::apply_rotation_x(psi, n, site, theta);
}
inline void apply_conditional_rotation_x(KernelBackend b, std::span<cplx> psi, int n, int control,
                                         int target, double theta) {
  b == KernelBackend::serial ? serial::apply_conditional_rotation_x(psi, n, control, target, theta)
                             : omp::apply_conditional_rotation_x(psi, n, control, target, theta);
}
inline void apply_flip_flop(KernelBackend b, std::span<cplx> psi, int n, int a, int c,
                            double theta) {
  b == KernelBackend::serial ? serial::apply_flip_flop(psi, n, a, c, theta)
                             : omp::apply_flip_flop(psi, n, a, c, theta);
}
inline double polarization(KernelBackend b, std::span<const cplx> psi, int n, int site) {
  return b == KernelBackend::serial ? serial::polarization(psi, n, site)
                                    : omp::polarization(psi, n, site);
}
inline double norm_squared(KernelBackend b, std::span<const cplx> psi) {
  return b == KernelBackend::serial ? serial::norm_squared(psi) : omp::norm_squared(psi);
}

/// Inserts a zero bit at position `bit` (counted from the LSB).
constexpr basis::Index insert_zero(basis::Index k, int bit) {
  const basis::Index low = k & ((basis::Index{1} << bit) - 1);
  return ((k >> bit) << (bit + 1)) | low;
}

/// Inserts zero bits at positions lo < hi.
constexpr basis::Index insert_two_zeros(basis::Index k, int lo, int hi) {
  return insert_zero(insert_zero(k, lo), hi);
}

/// Rotation angle in the form the pair update uses: v = 1 - cos theta
/// (computed as 2 sin^2(theta/2)) and s = sin theta. Keeping 1 - cos apart
/// from 1 makes the rounding defect in c^2 + s^2 scale with theta^2, so the
/// norm does not drift over millions of small steps.
struct Versine {
  double v;
  double s;
};

inline Versine versine(double theta) {
  const double h = std::sin(0.5 * theta);
  return {2.0 * h * h, std::sin(theta)};
}

/// (a, b) <- exp(-i theta sigma_x) (a, b), written out in real arithmetic.
/// Both backends call this, which keeps their results bit-identical.
/// exp(i phi) - 1, stored apart from the leading one for the same reason.
inline cplx phase_delta(double phi) {
  const Versine r = versine(phi);
  return {-r.v, r.s};
}

inline void turn(cplx& z, cplx d) {
  const double zr = z.real(), zi = z.imag();
  z = {zr + (d.real() * zr - d.imag() * zi), zi + (d.real() * zi + d.imag() * zr)};
}

inline void rotate_pair(cplx& a, cplx& b, Versine r) {
  const double ar = a.real(), ai = a.imag(), br = b.real(), bi = b.imag();
  a = cplx(ar + (r.s * bi - r.v * ar), ai - (r.s * br + r.v * ai));
  b = cplx(br + (r.s * ai - r.v * br), bi - (r.s * ar + r.v * bi));
}

/// Sets the worker count used by the OpenMP kernels; 0 keeps the runtime default.
void set_workers(int workers);
int workers();

}  // namespace kernels
}  // namespace spindiff
