#include <cmath>

#include "spindiff/kernels.hpp"

namespace spindiff::kernels::serial {

namespace {
int bit_of(int n, int site) { return n - 1 - site; }
}  // namespace

void apply_phase(std::span<cplx> psi, std::span<const cplx> delta) {
  for (std::size_t i = 0; i < psi.size(); ++i) turn(psi[i], delta[i]);
}

void apply_rotation_x(std::span<cplx> psi, int n, int site, double theta) {
  const int bit = bit_of(n, site);
  const basis::Index mask = basis::Index{1} << bit;
  const Versine r = versine(theta);
  const basis::Index half = psi.size() / 2;
  for (basis::Index k = 0; k < half; ++k) {
    const basis::Index i = insert_zero(k, bit);
    rotate_pair(psi[i], psi[i | mask], r);
  }
}

void apply_conditional_rotation_x(std::span<cplx> psi, int n, int control, int target,
                                  double theta) {
  const int tb = bit_of(n, target);
  const int cb = bit_of(n, control);
  const basis::Index tmask = basis::Index{1} << tb;
  const basis::Index cmask = basis::Index{1} << cb;
  const Versine r = versine(theta);
  const Versine rn{r.v, -r.s};
  const basis::Index half = psi.size() / 2;
  for (basis::Index k = 0; k < half; ++k) {
    const basis::Index i = insert_zero(k, tb);
    rotate_pair(psi[i], psi[i | tmask], (i & cmask) ? rn : r);
  }
}

void apply_flip_flop(std::span<cplx> psi, int n, int a, int b, double theta) {
  int ba = bit_of(n, a);
  int bb = bit_of(n, b);
  const basis::Index ma = basis::Index{1} << ba;
  const basis::Index mb = basis::Index{1} << bb;
  if (ba > bb) std::swap(ba, bb);
  const Versine r = versine(theta);
  const basis::Index quarter = psi.size() / 4;
  for (basis::Index k = 0; k < quarter; ++k) {
    const basis::Index base = insert_two_zeros(k, ba, bb);
    const basis::Index i = base | ma;
    const basis::Index j = base | mb;
    rotate_pair(psi[i], psi[j], r);
  }
}

double polarization(std::span<const cplx> psi, int n, int site) {
  const basis::Index mask = basis::Index{1} << bit_of(n, site);
  double total = 0.0;
  for (basis::Index start = 0; start < psi.size(); start += kReductionChunk) {
    const basis::Index stop = std::min<basis::Index>(start + kReductionChunk, psi.size());
    double acc = 0.0;
    for (basis::Index i = start; i < stop; ++i)
      acc += (i & mask) ? -std::norm(psi[i]) : std::norm(psi[i]);
    total += acc;
  }
  return total;
}

double norm_squared(std::span<const cplx> psi) {
  double total = 0.0;
  for (basis::Index start = 0; start < psi.size(); start += kReductionChunk) {
    const basis::Index stop = std::min<basis::Index>(start + kReductionChunk, psi.size());
    double acc = 0.0;
    for (basis::Index i = start; i < stop; ++i) acc += std::norm(psi[i]);
    total += acc;
  }
  return total;
}

}  // namespace spindiff::kernels::serial
