#include "spindiff/effective.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "spindiff/units.hpp"

namespace spindiff {

TiltedFrequencies tilted_frequencies(const FourSpinParams& p) {
  TiltedFrequencies f;
  f.delta12 = p.delta12();
  f.delta34 = p.delta34();
  if (f.delta12 > 0.0) {
    f.omega_z1 = p.omega_i * p.a_zz12 / f.delta12;
    f.omega_x1 = p.omega_i * p.a_zx12 / f.delta12;
  }
  if (f.delta34 > 0.0) {
    f.omega_z4 = p.omega_i * p.a_zz34 / f.delta34;
    f.omega_x4 = p.omega_i * p.a_zx34 / f.delta34;
  }
  return f;
}

namespace {
std::string ratio_warning(const char* lhs, double a, const char* rhs, double b, double margin) {
  std::ostringstream os;
  os << "hierarchy " << lhs << " > " << margin << " x " << rhs << " fails: " << to_linear(a)
     << " Hz vs " << to_linear(b) << " Hz";
  return os.str();
}
}  // namespace

Regime1Result regime1(const FourSpinParams& p, double margin) {
  const auto f = tilted_frequencies(p);
  if (!(f.delta12 > 0.0) || !(f.delta34 > 0.0))
    throw std::invalid_argument("regime 1 needs non-zero hyperfine norms on both carbons");
  Regime1Result r;
  const double d12sq = f.delta12 * f.delta12;
  const double d34sq = f.delta34 * f.delta34;
  const double mismatch = std::abs(d12sq - d34sq);
  r.omega = std::sqrt(std::abs(f.omega_z1 * f.omega_z4));
  r.delta = 2.0 * std::abs(f.omega_x1 * f.omega_x4) * r.omega * mismatch / (d12sq * d34sq);
  r.j_eff = 4.0 * std::abs(f.omega_x1 * f.omega_x4 * p.j_d) / (f.delta12 * f.delta34);
  r.j_dc = r.omega * mismatch / (2.0 * f.delta12 * f.delta34);

  // Delta12 >~ Delta34 only needs to hold loosely; the strict links are Delta > J_d > omega_I.
  const double dmin = std::min(f.delta12, f.delta34);
  r.hierarchy_ok = true;
  if (!(dmin > margin * std::abs(p.j_d))) {
    r.hierarchy_ok = false;
    r.warnings.push_back(ratio_warning("min(Delta12, Delta34)", dmin, "J_d", std::abs(p.j_d), margin));
  }
  if (!(std::abs(p.j_d) > margin * p.omega_i)) {
    r.hierarchy_ok = false;
    r.warnings.push_back(ratio_warning("J_d", std::abs(p.j_d), "omega_I", p.omega_i, margin));
  }
  const double dmax = std::max(f.delta12, f.delta34);
  r.large_mismatch = dmax > 10.0 * dmin && dmin < 10.0 * r.omega;
  if (r.large_mismatch)
    r.warnings.push_back("large hyperfine mismatch with the weaker coupling near omega");
  return r;
}

Regime2Result regime2(const FourSpinParams& p, double margin) {
  if (p.j_d == 0.0) throw std::invalid_argument("regime 2 needs a non-zero electron coupling");
  Regime2Result r;
  const double jd = std::abs(p.j_d);
  r.delta = p.omega_i * std::abs(p.a_zx34 * p.a_zx34 - p.a_zx12 * p.a_zx12) / (8.0 * jd * jd);
  r.j_eff = std::abs(p.a_zx34 * p.a_zx12) / (4.0 * jd);
  r.delocalized = r.delta < r.j_eff;
  const double dmax = std::max(p.delta12(), p.delta34());
  r.hierarchy_ok = true;
  if (!(jd > margin * dmax)) {
    r.hierarchy_ok = false;
    r.warnings.push_back(ratio_warning("J_d", jd, "max(Delta12, Delta34)", dmax, margin));
  }
  if (!(jd > margin * p.omega_i)) {
    r.hierarchy_ok = false;
    r.warnings.push_back(ratio_warning("J_d", jd, "omega_I", p.omega_i, margin));
  }
  return r;
}

double coupling_estimate(double omega_1, double a_bar, double j_d) {
  if (!(a_bar > 0.0)) throw std::invalid_argument("mean hyperfine coupling must be positive");
  return omega_1 * omega_1 * j_d / (2.0 * a_bar * a_bar);
}

DelocalizationThreshold delocalization_threshold(double a_bar, double delta_a, double omega_1) {
  if (!(delta_a >= 0.0)) throw std::invalid_argument("hyperfine spread must be non-negative");
  if (!(a_bar > delta_a))
    throw std::invalid_argument("mean hyperfine coupling must exceed its spread");
  DelocalizationThreshold t;
  t.mean_form = omega_1 * a_bar * delta_a / (a_bar * a_bar - delta_a * delta_a);
  const double d12 = a_bar + 0.5 * delta_a;
  const double d34 = a_bar - 0.5 * delta_a;
  t.pair_form = omega_1 * std::abs(d12 * d12 - d34 * d34) / (2.0 * d12 * d34);
  t.ratio = t.pair_form > 0.0 ? t.mean_form / t.pair_form : 1.0;
  return t;
}

SpinSystem build_effective_pair(double delta, double j_eff) {
  std::vector<SpinSite> sites{{0, Species::nuclear, "C1"}, {1, Species::nuclear, "C4"}};
  std::vector<HamiltonianTerm> t{terms::LocalLongitudinal{0, -0.5 * delta},
                                 terms::LocalLongitudinal{1, 0.5 * delta},
                                 terms::NuclearXY{0, 1, j_eff}};
  return SpinSystem(std::move(sites), std::move(t));
}

SpinSystem build_effective_pair(const Regime1Result& r) { return build_effective_pair(r.delta, r.j_eff); }
SpinSystem build_effective_pair(const Regime2Result& r) { return build_effective_pair(r.delta, r.j_eff); }

double max_transfer(double delta, double j_eff) {
  const double j2 = j_eff * j_eff;
  const double d2 = delta * delta;
  return j2 + d2 > 0.0 ? j2 / (j2 + d2) : 0.0;
}

void NetworkSpec::validate() const {
  if (n_sites <= 0) throw std::invalid_argument("network needs at least one site");
  if (!fields.empty() && static_cast<int>(fields.size()) != n_sites)
    throw std::invalid_argument("network field list length does not match the site count");
  std::map<std::pair<int, int>, std::pair<double, double>> seen;
  for (const auto& c : couplings) {
    if (c.i < 0 || c.j < 0 || c.i >= n_sites || c.j >= n_sites)
      throw std::invalid_argument("network coupling index out of range");
    if (c.i == c.j) throw std::invalid_argument("network self-coupling on site " + std::to_string(c.i));
    const auto key = std::minmax(c.i, c.j);
    const auto value = std::make_pair(c.j_zz, c.j_xy);
    auto [it, inserted] = seen.emplace(key, value);
    if (!inserted && it->second != value)
      throw std::invalid_argument("asymmetric coupling table between sites " +
                                  std::to_string(key.first) + " and " + std::to_string(key.second));
  }
}

SpinSystem build_network(const NetworkSpec& spec) {
  spec.validate();
  std::vector<SpinSite> sites;
  for (int i = 0; i < spec.n_sites; ++i) sites.push_back({i, Species::nuclear, "C" + std::to_string(i)});
  std::vector<HamiltonianTerm> t;
  for (int i = 0; i < static_cast<int>(spec.fields.size()); ++i)
    if (spec.fields[i] != 0.0) t.emplace_back(terms::LocalLongitudinal{i, spec.fields[i]});
  std::map<std::pair<int, int>, bool> done;
  for (const auto& c : spec.couplings) {
    const auto key = std::minmax(c.i, c.j);
    if (!done.emplace(key, true).second) continue;  // mirrored entry
    if (c.j_zz != 0.0) t.emplace_back(terms::NuclearIsing{key.first, key.second, c.j_zz});
    if (c.j_xy != 0.0) t.emplace_back(terms::NuclearXY{key.first, key.second, 2.0 * c.j_xy});
  }
  return SpinSystem(std::move(sites), std::move(t));
}

std::vector<std::vector<int>> CayleyTree::ring_sites() const {
  std::vector<std::vector<int>> out(rings.size());
  for (std::size_t s = 0; s < ring_of.size(); ++s) out[ring_of[s]].push_back(static_cast<int>(s));
  return out;
}

CayleyTree cayley_tree(const std::vector<int>& rings, const std::vector<double>& couplings) {
  if (rings.size() < 2) throw std::invalid_argument("Cayley tree needs at least two rings");
  if (rings[0] != 1) throw std::invalid_argument("Cayley tree center ring must hold one site");
  const int branching = rings[1];
  if (branching < 1) throw std::invalid_argument("Cayley tree branching must be positive");
  for (std::size_t r = 2; r < rings.size(); ++r)
    if (rings[r] != rings[r - 1] * (branching - 1))
      throw std::invalid_argument("ring sizes are inconsistent with branching " +
                                  std::to_string(branching));
  if (couplings.size() != rings.size() - 1)
    throw std::invalid_argument("need one coupling per ring boundary");

  CayleyTree tree;
  tree.rings = rings;
  tree.ring_of.push_back(0);
  std::vector<int> prev{0};
  int next = 1;
  for (std::size_t r = 1; r < rings.size(); ++r) {
    std::vector<int> cur;
    for (int k = 0; k < rings[r]; ++k) {
      cur.push_back(next);
      tree.ring_of.push_back(static_cast<int>(r));
      ++next;
    }
    const int per_parent = rings[r] / static_cast<int>(prev.size());
    for (std::size_t p = 0; p < prev.size(); ++p)
      for (int c = 0; c < per_parent; ++c)
        tree.network.couplings.push_back({prev[p], cur[p * per_parent + c], 0.0, couplings[r - 1]});
    prev = std::move(cur);
  }
  tree.network.n_sites = next;
  return tree;
}

std::vector<double> default_cayley_couplings() {
  return {to_angular(1e3), to_angular(10e3), to_angular(100e3)};
}

}  // namespace spindiff
