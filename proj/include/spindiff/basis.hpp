#pragma once

// Product-basis conventions shared by the dense builders and the kernels.
//
// Basis index bits are big-endian over site ids: site 0 is the most
// significant bit. A zero bit is spin up (m = +1/2), a one bit spin down.

#include <cstdint>

namespace spindiff::basis {

using Index = std::uint64_t;

constexpr Index dimension(int n_sites) { return Index{1} << n_sites; }

constexpr Index site_mask(int n_sites, int site) {
  return Index{1} << (n_sites - 1 - site);
}

constexpr bool is_down(Index state, int n_sites, int site) {
  return (state & site_mask(n_sites, site)) != 0;
}

/// Eigenvalue of S^z for `site` in basis state `state`: +1/2 or -1/2.
constexpr double spin_z(Index state, int n_sites, int site) {
  return is_down(state, n_sites, site) ? -0.5 : 0.5;
}

}  // namespace spindiff::basis
