#include <omp.h>

#include <cmath>
#include <vector>

#include "spindiff/kernels.hpp"

namespace spindiff::kernels {

namespace {
int g_workers = 0;
int bit_of(int n, int site) { return n - 1 - site; }

// Below this size threading costs more than it saves.
constexpr basis::Index kParallelThreshold = basis::Index{1} << 12;

int threads_for(basis::Index work) {
  if (work < kParallelThreshold) return 1;
  return g_workers > 0 ? g_workers : omp_get_max_threads();
}

// Small vectors take the serial path: same arithmetic, no thread-team cost.
bool small(std::size_t size) { return size < kParallelThreshold; }

// Chunk sums are computed independently and added in chunk order, so the
// result does not depend on the thread count.
template <class F>
double chunked_sum(basis::Index size, F&& body) {
  const basis::Index chunks = (size + kReductionChunk - 1) / kReductionChunk;
  std::vector<double> partial(chunks, 0.0);
  const auto nc = static_cast<long long>(chunks);
#pragma omp parallel for schedule(static) num_threads(threads_for(size))
  for (long long c = 0; c < nc; ++c) {
    const basis::Index start = static_cast<basis::Index>(c) * kReductionChunk;
    const basis::Index stop = std::min<basis::Index>(start + kReductionChunk, size);
    double acc = 0.0;
    for (basis::Index i = start; i < stop; ++i) acc += body(i);
    partial[c] = acc;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}
}  // namespace

void set_workers(int workers) { g_workers = workers < 0 ? 0 : workers; }
int workers() { return g_workers > 0 ? g_workers : omp_get_max_threads(); }

namespace omp {

void apply_phase(std::span<cplx> psi, std::span<const cplx> delta) {
  if (small(psi.size())) return serial::apply_phase(psi, delta);
  const auto size = static_cast<long long>(psi.size());
#pragma omp parallel for schedule(static) num_threads(threads_for(psi.size()))
  for (long long i = 0; i < size; ++i) turn(psi[i], delta[i]);
}

void apply_rotation_x(std::span<cplx> psi, int n, int site, double theta) {
  if (small(psi.size())) return serial::apply_rotation_x(psi, n, site, theta);
  const int bit = bit_of(n, site);
  const basis::Index mask = basis::Index{1} << bit;
  const Versine r = versine(theta);
  const auto half = static_cast<long long>(psi.size() / 2);
#pragma omp parallel for schedule(static) num_threads(threads_for(psi.size()))
  for (long long k = 0; k < half; ++k) {
    const basis::Index i = insert_zero(static_cast<basis::Index>(k), bit);
    rotate_pair(psi[i], psi[i | mask], r);
  }
}

void apply_conditional_rotation_x(std::span<cplx> psi, int n, int control, int target,
                                  double theta) {
  if (small(psi.size())) return serial::apply_conditional_rotation_x(psi, n, control, target, theta);
  const int tb = bit_of(n, target);
  const basis::Index tmask = basis::Index{1} << tb;
  const basis::Index cmask = basis::Index{1} << bit_of(n, control);
  const Versine r = versine(theta);
  const Versine rn{r.v, -r.s};
  const auto half = static_cast<long long>(psi.size() / 2);
#pragma omp parallel for schedule(static) num_threads(threads_for(psi.size()))
  for (long long k = 0; k < half; ++k) {
    const basis::Index i = insert_zero(static_cast<basis::Index>(k), tb);
    rotate_pair(psi[i], psi[i | tmask], (i & cmask) ? rn : r);
  }
}

void apply_flip_flop(std::span<cplx> psi, int n, int a, int b, double theta) {
  if (small(psi.size())) return serial::apply_flip_flop(psi, n, a, b, theta);
  int ba = bit_of(n, a);
  int bb = bit_of(n, b);
  const basis::Index ma = basis::Index{1} << ba;
  const basis::Index mb = basis::Index{1} << bb;
  if (ba > bb) std::swap(ba, bb);
  const Versine r = versine(theta);
  const auto quarter = static_cast<long long>(psi.size() / 4);
#pragma omp parallel for schedule(static) num_threads(threads_for(psi.size()))
  for (long long k = 0; k < quarter; ++k) {
    const basis::Index base = insert_two_zeros(static_cast<basis::Index>(k), ba, bb);
    const basis::Index i = base | ma;
    const basis::Index j = base | mb;
    rotate_pair(psi[i], psi[j], r);
  }
}

double polarization(std::span<const cplx> psi, int n, int site) {
  if (small(psi.size())) return serial::polarization(psi, n, site);
  const basis::Index mask = basis::Index{1} << bit_of(n, site);
  return chunked_sum(psi.size(), [&](basis::Index i) {
    return (i & mask) ? -std::norm(psi[i]) : std::norm(psi[i]);
  });
}

double norm_squared(std::span<const cplx> psi) {
  if (small(psi.size())) return serial::norm_squared(psi);
  return chunked_sum(psi.size(), [&](basis::Index i) { return std::norm(psi[i]); });
}

}  // namespace omp
}  // namespace spindiff::kernels
