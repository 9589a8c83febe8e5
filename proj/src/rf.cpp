#include "spindiff/rf.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "spindiff/evolution.hpp"

namespace spindiff {

SpinSystem rotating_frame(const SpinSystem& s, const RfDrive& drive) {
  if (s.frame() != Frame::hyperfine)
    throw std::invalid_argument("rotating frame needs a system in the hyperfine frame");
  if (!(drive.amplitude >= 0.0)) throw std::invalid_argument("drive amplitude must be non-negative");
  for (int n : s.nuclear_sites())
    if (!s.axis_of(n))
      throw std::invalid_argument("nucleus " + std::to_string(n) +
                                  " has no hyperfine axis to project the drive on");

  const bool keep_static_transverse = drive.carrier == 0.0;
  std::vector<HamiltonianTerm> out;
  std::map<int, bool> has_longitudinal;
  for (const auto& term : s.terms()) {
    if (auto* t = std::get_if<terms::LocalLongitudinal>(&term); t && s.axis_of(t->site)) {
      const auto* ax = s.axis_of(t->site);
      out.emplace_back(terms::LocalLongitudinal{
          t->site, t->omega_z + drive.amplitude * ax->cos_theta - drive.carrier});
      has_longitudinal[t->site] = true;
      continue;
    }
    if (auto* t = std::get_if<terms::LocalTransverse>(&term); t && s.axis_of(t->site)) {
      if (keep_static_transverse) out.push_back(term);
      continue;
    }
    out.push_back(term);
  }
  for (const auto& ax : s.axes()) {
    if (!has_longitudinal[ax.nucleus]) {
      const double shift = drive.amplitude * ax.cos_theta - drive.carrier;
      if (shift != 0.0) out.emplace_back(terms::LocalLongitudinal{ax.nucleus, shift});
    }
    const double omega_x = drive.amplitude * ax.sin_theta;
    if (omega_x != 0.0) out.emplace_back(terms::LocalTransverse{ax.nucleus, omega_x});
  }
  return SpinSystem(s.sites(), std::move(out), Frame::rotating, s.axes());
}

namespace {

SpinSystem hyperfine_system(const FourSpinParams& p) {
  return rotate_hyperfine_frame(build_four_spin(p));
}

Eigen::MatrixXcd block_of(const SpinSystem& s, SubspaceSelector sel, std::vector<basis::Index>* idx) {
  auto block = project_subspace(to_matrix(s), s, sel);
  if (idx) *idx = block.basis;
  return block.matrix;
}

}  // namespace

BranchSpectrum spectrum_vs_jd(const FourSpinParams& p, const std::vector<double>& jd_grid,
                              SubspaceSelector sel) {
  if (jd_grid.empty()) throw std::invalid_argument("J_d grid is empty");
  BranchSpectrum out;
  out.j_d = jd_grid;
  Eigen::MatrixXcd prev;
  for (std::size_t k = 0; k < jd_grid.size(); ++k) {
    FourSpinParams q = p;
    q.j_d = jd_grid[k];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(block_of(hyperfine_system(q), sel, nullptr));
    const Eigen::Index d = es.eigenvalues().size();
    if (k == 0) {
      out.energies.resize(static_cast<Eigen::Index>(jd_grid.size()), d);
      out.energies.row(0) = es.eigenvalues().transpose();
      prev = es.eigenvectors();
      continue;
    }
    // Greedy assignment on the overlap matrix, largest overlaps first.
    Eigen::MatrixXd overlap = (prev.adjoint() * es.eigenvectors()).cwiseAbs();
    std::vector<Eigen::Index> assign(d, -1);
    std::vector<bool> used(d, false);
    for (Eigen::Index round = 0; round < d; ++round) {
      double best = -1.0;
      Eigen::Index bi = 0, bj = 0;
      for (Eigen::Index i = 0; i < d; ++i) {
        if (assign[i] >= 0) continue;
        for (Eigen::Index j = 0; j < d; ++j)
          if (!used[j] && overlap(i, j) > best) {
            best = overlap(i, j);
            bi = i;
            bj = j;
          }
      }
      assign[bi] = bj;
      used[bj] = true;
    }
    Eigen::MatrixXcd next(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      out.energies(static_cast<Eigen::Index>(k), i) = es.eigenvalues()(assign[i]);
      next.col(i) = es.eigenvectors().col(assign[i]);
    }
    prev = std::move(next);
  }
  return out;
}

std::pair<double, double> dip_cell(const FourSpinParams& p, const RfDrive& drive,
                                   const DipMapOptions& opts) {
  if (!(opts.window > 0.0)) throw std::invalid_argument("averaging window must be positive");
  if (opts.samples < 1) throw std::invalid_argument("need at least one time sample");
  using namespace four_spin;
  const SpinSystem s = rotating_frame(hyperfine_system(p), drive);
  const int n = s.size();

  std::vector<std::pair<basis::Index, double>> init;
  if (opts.init == DipInit::zero_projection) {
    init = {{basis_index({0, 0, 1, 0}), 0.5}, {basis_index({0, 1, 0, 0}), 0.5}};
  } else {
    for (int e2 = 0; e2 < 2; ++e2)
      for (int e3 = 0; e3 < 2; ++e3) init.push_back({basis_index({0, e2, e3, 0}), 0.25});
  }

  double nuclear = 0.0;
  double electron = 0.0;
  std::map<double, std::pair<std::vector<basis::Index>, ExactPropagator>> blocks;
  for (const auto& [state, weight] : init) {
    const double m = electron_projection(s, state);
    auto it = blocks.find(m);
    if (it == blocks.end()) {
      std::vector<basis::Index> idx;
      Eigen::MatrixXcd b = block_of(s, {m}, &idx);
      it = blocks.emplace(m, std::make_pair(idx, ExactPropagator(b))).first;
    }
    const auto& [idx, prop] = it->second;
    const auto pos = std::find(idx.begin(), idx.end(), state) - idx.begin();
    StateVector psi0 = StateVector::Zero(static_cast<Eigen::Index>(idx.size()));
    psi0(pos) = 1.0;
    double nuc_acc = 0.0;
    double el_acc = 0.0;
    for (int k = 0; k < opts.samples; ++k) {
      const double t = opts.samples == 1 ? 0.0 : opts.window * k / (opts.samples - 1);
      const StateVector psi = prop.evolve(psi0, t);
      for (std::size_t r = 0; r < idx.size(); ++r) {
        const double w = std::norm(psi(static_cast<Eigen::Index>(r)));
        nuc_acc += w * (basis::spin_z(idx[r], n, kNucleus1) + basis::spin_z(idx[r], n, kNucleus4));
        el_acc += w * 2.0 * basis::spin_z(idx[r], n, kElectron2);
      }
    }
    // (p1 + p4)/2 with p = 2<Iz> is <I1z> + <I4z>
    nuclear += weight * nuc_acc / opts.samples;
    electron += weight * el_acc / opts.samples;
  }
  return {nuclear, electron};
}

DipMap dip_map(const FourSpinParams& p, double amplitude, const std::vector<double>& carrier_grid,
               const std::vector<double>& jd_grid, const DipMapOptions& opts) {
  if (!(opts.window > 0.0)) throw std::invalid_argument("averaging window must be positive");
  if (carrier_grid.empty() || jd_grid.empty()) throw std::invalid_argument("empty dip-map grid");
  DipMap map;
  map.carrier = carrier_grid;
  map.j_d = jd_grid;
  const auto rows = static_cast<long long>(jd_grid.size());
  const auto cols = static_cast<long long>(carrier_grid.size());
  map.nuclear.resize(rows, cols);
  map.electron.resize(rows, cols);
  // Each cell writes only its own slot, so the result is independent of scheduling.
#pragma omp parallel for schedule(dynamic) collapse(2)
  for (long long r = 0; r < rows; ++r)
    for (long long c = 0; c < cols; ++c) {
      FourSpinParams q = p;
      q.j_d = jd_grid[r];
      const auto [nuc, el] = dip_cell(q, {amplitude, carrier_grid[c]}, opts);
      map.nuclear(r, c) = nuc;
      map.electron(r, c) = el;
    }
  return map;
}

std::vector<Dip> find_dips(const std::vector<double>& x, const std::vector<double>& y,
                           double contrast) {
  if (x.size() != y.size()) throw std::invalid_argument("dip search needs matching x and y");
  std::vector<Dip> dips;
  if (y.size() < 3) return dips;
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  const double range = *hi - *lo;
  if (!(range > 1e-9)) return dips;
  const double threshold = *hi - contrast * range;
  for (std::size_t i = 1; i + 1 < y.size(); ++i) {
    if (!(y[i] < y[i - 1] && y[i] <= y[i + 1] && y[i] < threshold)) continue;
    const double x0 = x[i - 1], x1 = x[i], x2 = x[i + 1];
    const double y0 = y[i - 1], y1 = y[i], y2 = y[i + 1];
    const double num = (x1 - x0) * (x1 - x0) * (y1 - y2) - (x1 - x2) * (x1 - x2) * (y1 - y0);
    const double den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    double xv = den != 0.0 ? x1 - 0.5 * num / den : x1;
    xv = std::clamp(xv, std::min(x0, x2), std::max(x0, x2));
    dips.push_back({xv, *hi - y1, i});
  }
  return dips;
}

std::vector<double> transition_frequencies(const FourSpinParams& p, double amplitude,
                                           SubspaceSelector sel, bool single_nucleus) {
  using namespace four_spin;
  FourSpinParams q = p;
  if (single_nucleus) q.j_d = 0.0;
  // Zero-carrier rotating frame keeps the drive's longitudinal shift.
  const SpinSystem hf = rotating_frame(hyperfine_system(q), {amplitude, 0.0});
  // Secular part: drop every transverse nuclear field.
  std::vector<HamiltonianTerm> secular;
  for (const auto& term : hf.terms())
    if (!std::holds_alternative<terms::LocalTransverse>(term)) secular.push_back(term);
  const SpinSystem s(hf.sites(), secular, Frame::rotating, hf.axes());
  std::vector<basis::Index> idx;
  const Eigen::MatrixXcd block = block_of(s, sel, &idx);
  const int n = s.size();
  const auto d = static_cast<Eigen::Index>(idx.size());

  // Nuclear magnetization is diagonal in the product basis and conserved by
  // the secular part, so diagonalize sector by sector.
  std::map<double, std::vector<Eigen::Index>> sectors;
  for (Eigen::Index r = 0; r < d; ++r)
    sectors[basis::spin_z(idx[r], n, kNucleus1) + basis::spin_z(idx[r], n, kNucleus4)].push_back(r);
  Eigen::MatrixXcd vecs = Eigen::MatrixXcd::Zero(d, d);
  std::vector<double> energy(d), magnet(d);
  Eigen::Index col = 0;
  for (const auto& [m, rows] : sectors) {
    const auto k = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXcd sub(k, k);
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = 0; b < k; ++b) sub(a, b) = block(rows[a], rows[b]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sub);
    for (Eigen::Index j = 0; j < k; ++j, ++col) {
      for (Eigen::Index a = 0; a < k; ++a) vecs(rows[a], col) = es.eigenvectors()(a, j);
      energy[col] = es.eigenvalues()(j);
      magnet[col] = m;
    }
  }

  // Drive operator sum_i sin(theta_i) I'x_i restricted to the block.
  Eigen::MatrixXcd drive = Eigen::MatrixXcd::Zero(d, d);
  for (const auto& ax : s.axes())
    for (Eigen::Index c = 0; c < d; ++c) {
      const basis::Index flipped = idx[c] ^ basis::site_mask(n, ax.nucleus);
      const auto r = std::find(idx.begin(), idx.end(), flipped) - idx.begin();
      if (r < d) drive(r, c) += 0.5 * ax.sin_theta;
    }
  const Eigen::MatrixXcd coupling = vecs.adjoint() * drive * vecs;

  std::vector<double> out;
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b) {
      if (std::abs(magnet[a] - magnet[b] - 1.0) > 1e-9) continue;
      if (std::abs(coupling(a, b)) < 1e-6) continue;
      out.push_back(energy[a] - energy[b]);
    }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace spindiff
