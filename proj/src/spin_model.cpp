#include "spindiff/spin_model.hpp"

#include <cmath>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "spindiff/units.hpp"

namespace spindiff {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string site_error(const std::string& what, int site) {
  return what + " (site " + std::to_string(site) + ")";
}

}  // namespace

double coefficient(const HamiltonianTerm& term) {
  return std::visit(overloaded{
                        [](const terms::Zeeman& t) { return t.sign * t.omega; },
                        [](const terms::HyperfineSecular& t) { return t.a_zz; },
                        [](const terms::HyperfinePseudosecular& t) { return t.a_zx; },
                        [](const terms::ElectronFlipFlop& t) { return t.j_d; },
                        [](const terms::NuclearXY& t) { return t.j_xy; },
                        [](const terms::NuclearIsing& t) { return t.j_zz; },
                        [](const terms::LocalTransverse& t) { return t.omega_x; },
                        [](const terms::LocalLongitudinal& t) { return t.omega_z; },
                    },
                    term);
}

bool is_diagonal(const HamiltonianTerm& term) {
  return std::holds_alternative<terms::Zeeman>(term) ||
         std::holds_alternative<terms::HyperfineSecular>(term) ||
         std::holds_alternative<terms::NuclearIsing>(term) ||
         std::holds_alternative<terms::LocalLongitudinal>(term);
}

std::vector<int> term_sites(const HamiltonianTerm& term) {
  return std::visit(overloaded{
                        [](const terms::Zeeman& t) { return std::vector<int>{t.site}; },
                        [](const terms::HyperfineSecular& t) {
                          return std::vector<int>{t.electron, t.nucleus};
                        },
                        [](const terms::HyperfinePseudosecular& t) {
                          return std::vector<int>{t.electron, t.nucleus};
                        },
                        [](const terms::ElectronFlipFlop& t) {
                          return std::vector<int>{t.first, t.second};
                        },
                        [](const terms::NuclearXY& t) {
                          return std::vector<int>{t.first, t.second};
                        },
                        [](const terms::NuclearIsing& t) {
                          return std::vector<int>{t.first, t.second};
                        },
                        [](const terms::LocalTransverse& t) { return std::vector<int>{t.site}; },
                        [](const terms::LocalLongitudinal& t) {
                          return std::vector<int>{t.site};
                        },
                    },
                    term);
}

std::string describe(const HamiltonianTerm& term) {
  std::ostringstream os;
  os.precision(10);
  std::visit(overloaded{
                 [&](const terms::Zeeman& t) {
                   os << "Zeeman(" << t.site << ", " << t.sign * t.omega << ")";
                 },
                 [&](const terms::HyperfineSecular& t) {
                   os << "HyperfineSecular(" << t.electron << ", " << t.nucleus << ", " << t.a_zz
                      << ")";
                 },
                 [&](const terms::HyperfinePseudosecular& t) {
                   os << "HyperfinePseudosecular(" << t.electron << ", " << t.nucleus << ", "
                      << t.a_zx << ")";
                 },
                 [&](const terms::ElectronFlipFlop& t) {
                   os << "ElectronFlipFlop(" << t.first << ", " << t.second << ", " << t.j_d
                      << ")";
                 },
                 [&](const terms::NuclearXY& t) {
                   os << "NuclearXY(" << t.first << ", " << t.second << ", " << t.j_xy << ")";
                 },
                 [&](const terms::NuclearIsing& t) {
                   os << "NuclearIsing(" << t.first << ", " << t.second << ", " << t.j_zz << ")";
                 },
                 [&](const terms::LocalTransverse& t) {
                   os << "LocalTransverse(" << t.site << ", " << t.omega_x << ")";
                 },
                 [&](const terms::LocalLongitudinal& t) {
                   os << "LocalLongitudinal(" << t.site << ", " << t.omega_z << ")";
                 },
             },
             term);
  return os.str();
}

SpinSystem::SpinSystem(std::vector<SpinSite> sites, std::vector<HamiltonianTerm> terms,
                       Frame frame, std::vector<HyperfineAxis> axes)
    : sites_(std::move(sites)), terms_(std::move(terms)), frame_(frame), axes_(std::move(axes)) {
  if (sites_.empty()) throw std::invalid_argument("spin system needs at least one site");
  if (sites_.size() > 62) throw std::invalid_argument("spin system too large for a 64-bit basis");
  for (std::size_t i = 0; i < sites_.size(); ++i)
    if (sites_[i].id != static_cast<int>(i))
      throw std::invalid_argument("site ids must be consecutive from 0");

  const int n = size();
  auto check_site = [&](int s) {
    if (s < 0 || s >= n) throw std::invalid_argument(site_error("site index out of range", s));
  };
  auto check_pair = [&](int a, int b) {
    check_site(a);
    check_site(b);
    if (a == b) throw std::invalid_argument(site_error("two-site term on a single site", a));
  };
  auto require = [&](bool ok, const std::string& msg, int s) {
    if (!ok) throw std::invalid_argument(site_error(msg, s));
  };

  for (const auto& term : terms_) {
    if (!std::isfinite(coefficient(term)))
      throw std::invalid_argument("non-finite coefficient in " + describe(term));
    std::visit(overloaded{
                   [&](const terms::Zeeman& t) {
                     check_site(t.site);
                     require(t.sign == 1 || t.sign == -1, "Zeeman sign must be +-1", t.site);
                   },
                   [&](const terms::HyperfineSecular& t) {
                     check_pair(t.electron, t.nucleus);
                     require(is_electron(t.electron), "hyperfine electron site is nuclear",
                             t.electron);
                     require(!is_electron(t.nucleus), "hyperfine nuclear site is an electron",
                             t.nucleus);
                   },
                   [&](const terms::HyperfinePseudosecular& t) {
                     check_pair(t.electron, t.nucleus);
                     require(is_electron(t.electron), "hyperfine electron site is nuclear",
                             t.electron);
                     require(!is_electron(t.nucleus), "hyperfine nuclear site is an electron",
                             t.nucleus);
                   },
                   [&](const terms::ElectronFlipFlop& t) {
                     check_pair(t.first, t.second);
                     require(is_electron(t.first) && is_electron(t.second),
                             "flip-flop must join two electrons", t.first);
                   },
                   [&](const terms::NuclearXY& t) {
                     check_pair(t.first, t.second);
                     require(!is_electron(t.first) && !is_electron(t.second),
                             "XY coupling must join two nuclei", t.first);
                   },
                   [&](const terms::NuclearIsing& t) {
                     check_pair(t.first, t.second);
                     require(!is_electron(t.first) && !is_electron(t.second),
                             "Ising coupling must join two nuclei", t.first);
                   },
                   [&](const terms::LocalTransverse& t) { check_site(t.site); },
                   [&](const terms::LocalLongitudinal& t) { check_site(t.site); },
               },
               term);
  }
  for (const auto& ax : axes_) {
    check_pair(ax.nucleus, ax.electron);
    require(std::abs(ax.cos_theta * ax.cos_theta + ax.sin_theta * ax.sin_theta - 1.0) < 1e-12,
            "hyperfine axis is not a unit vector", ax.nucleus);
  }
}

const HyperfineAxis* SpinSystem::axis_of(int nucleus) const {
  for (const auto& ax : axes_)
    if (ax.nucleus == nucleus) return &ax;
  return nullptr;
}

std::vector<int> SpinSystem::electron_sites() const {
  std::vector<int> out;
  for (const auto& s : sites_)
    if (s.species == Species::electron) out.push_back(s.id);
  return out;
}

std::vector<int> SpinSystem::nuclear_sites() const {
  std::vector<int> out;
  for (const auto& s : sites_)
    if (s.species == Species::nuclear) out.push_back(s.id);
  return out;
}

double FourSpinParams::delta12() const { return std::hypot(a_zz12, a_zx12); }
double FourSpinParams::delta34() const { return std::hypot(a_zz34, a_zx34); }

FourSpinParams FourSpinParams::at_field(double tesla) {
  FourSpinParams p;
  p.omega_i = carbon_larmor(tesla);
  p.omega_s = electron_larmor(tesla);
  return p;
}

void FourSpinParams::validate() const {
  if (!(omega_i > 0.0)) throw std::invalid_argument("omega_I must be positive");
  if (!(omega_s > 0.0)) throw std::invalid_argument("omega_S must be positive");
  for (double v : {a_zz12, a_zx12, a_zz34, a_zx34, j_d})
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite four-spin parameter");
}

SpinSystem build_four_spin(const FourSpinParams& p) {
  p.validate();
  using namespace four_spin;
  std::vector<SpinSite> sites{{kNucleus1, Species::nuclear, "C1"},
                              {kElectron2, Species::electron, "P1a"},
                              {kElectron3, Species::electron, "P1b"},
                              {kNucleus4, Species::nuclear, "C4"}};
  std::vector<HamiltonianTerm> t{
      terms::Zeeman{kNucleus1, p.omega_i, -1},
      terms::Zeeman{kNucleus4, p.omega_i, -1},
      terms::Zeeman{kElectron2, p.omega_s, +1},
      terms::Zeeman{kElectron3, p.omega_s, +1},
      terms::HyperfineSecular{kElectron2, kNucleus1, p.a_zz12},
      terms::HyperfinePseudosecular{kElectron2, kNucleus1, p.a_zx12},
      terms::HyperfineSecular{kElectron3, kNucleus4, p.a_zz34},
      terms::HyperfinePseudosecular{kElectron3, kNucleus4, p.a_zx34},
      terms::ElectronFlipFlop{kElectron2, kElectron3, p.j_d},
  };
  return SpinSystem(std::move(sites), std::move(t));
}

Eigen::MatrixXcd to_matrix(const SpinSystem& s) {
  if (s.size() > kDenseSiteLimit)
    throw std::invalid_argument("system has " + std::to_string(s.size()) +
                                " sites; dense assembly is limited to " +
                                std::to_string(kDenseSiteLimit) +
                                ", use the term-wise Trotter engine instead");
  const int n = s.size();
  const auto dim = static_cast<Eigen::Index>(s.dim());
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
  for (Eigen::Index col = 0; col < dim; ++col)
    for (const auto& term : s.terms())
      for_each_element(term, n, static_cast<basis::Index>(col), [&](basis::Index row, double v) {
        h(static_cast<Eigen::Index>(row), col) += v;
      });
  return h;
}

SpinSystem rotate_hyperfine_frame(const SpinSystem& s) {
  if (s.frame() != Frame::laboratory)
    throw std::invalid_argument("system is already in a rotated frame");

  struct Coupling {
    int electron = -1;
    double a_zz = 0.0;
    double a_zx = 0.0;
  };
  std::map<int, Coupling> hf;
  auto attach = [&](int nucleus, int electron) -> Coupling& {
    auto& c = hf[nucleus];
    if (c.electron >= 0 && c.electron != electron)
      throw std::invalid_argument(site_error("nucleus is hyperfine-coupled to two electrons",
                                             nucleus));
    c.electron = electron;
    return c;
  };
  for (const auto& term : s.terms()) {
    if (auto* t = std::get_if<terms::HyperfineSecular>(&term))
      attach(t->nucleus, t->electron).a_zz += t->a_zz;
    else if (auto* t = std::get_if<terms::HyperfinePseudosecular>(&term))
      attach(t->nucleus, t->electron).a_zx += t->a_zx;
  }

  std::vector<HyperfineAxis> axes;
  for (const auto& [nucleus, c] : hf) {
    const double norm = std::hypot(c.a_zz, c.a_zx);
    if (norm == 0.0) continue;
    axes.push_back({nucleus, c.electron, norm, c.a_zz / norm, c.a_zx / norm});
  }
  auto axis = [&](int site) -> const HyperfineAxis* {
    for (const auto& ax : axes)
      if (ax.nucleus == site) return &ax;
    return nullptr;
  };

  // Iz = cos Iz' - sin Ix',  Ix = sin Iz' + cos Ix'
  std::vector<HamiltonianTerm> out;
  for (const auto& term : s.terms()) {
    const bool handled = std::visit(
        overloaded{
            [&](const terms::Zeeman& t) {
              const auto* ax = axis(t.site);
              if (!ax) return false;
              const double w = t.sign * t.omega;
              out.emplace_back(terms::LocalLongitudinal{t.site, w * ax->cos_theta});
              out.emplace_back(terms::LocalTransverse{t.site, -w * ax->sin_theta});
              return true;
            },
            [&](const terms::LocalLongitudinal& t) {
              const auto* ax = axis(t.site);
              if (!ax) return false;
              out.emplace_back(terms::LocalLongitudinal{t.site, t.omega_z * ax->cos_theta});
              out.emplace_back(terms::LocalTransverse{t.site, -t.omega_z * ax->sin_theta});
              return true;
            },
            [&](const terms::LocalTransverse& t) {
              const auto* ax = axis(t.site);
              if (!ax) return false;
              out.emplace_back(terms::LocalLongitudinal{t.site, t.omega_x * ax->sin_theta});
              out.emplace_back(terms::LocalTransverse{t.site, t.omega_x * ax->cos_theta});
              return true;
            },
            [&](const terms::HyperfineSecular& t) { return axis(t.nucleus) != nullptr; },
            [&](const terms::HyperfinePseudosecular& t) { return axis(t.nucleus) != nullptr; },
            [&](const auto& t) {
              for (int site : term_sites(HamiltonianTerm{t}))
                if (axis(site))
                  throw std::invalid_argument(
                      site_error("nuclear pair coupling on a rotated nucleus is not supported",
                                 site));
              return false;
            },
        },
        term);
    if (!handled) out.push_back(term);
  }

  for (const auto& ax : axes) out.emplace_back(terms::HyperfineSecular{ax.electron, ax.nucleus, ax.norm});
  return SpinSystem(s.sites(), std::move(out), Frame::hyperfine, std::move(axes));
}

double electron_projection(const SpinSystem& s, basis::Index state) {
  double m = 0.0;
  for (int e : s.electron_sites()) m += basis::spin_z(state, s.size(), e);
  return m;
}

SubspaceBlock project_subspace(const Eigen::MatrixXcd& h, const SpinSystem& s,
                               SubspaceSelector sel) {
  if (h.rows() != static_cast<Eigen::Index>(s.dim()) || h.cols() != h.rows())
    throw std::invalid_argument("matrix does not match the spin system dimension");
  SubspaceBlock block;
  for (basis::Index i = 0; i < s.dim(); ++i)
    if (std::abs(electron_projection(s, i) - sel.electron_projection) < 1e-9)
      block.basis.push_back(i);
  if (block.basis.empty())
    throw std::invalid_argument("electron projection " + std::to_string(sel.electron_projection) +
                                " is not realizable");
  const auto d = static_cast<Eigen::Index>(block.basis.size());
  block.matrix.resize(d, d);
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < d; ++c)
      block.matrix(r, c) = h(static_cast<Eigen::Index>(block.basis[r]),
                             static_cast<Eigen::Index>(block.basis[c]));
  return block;
}

BellBlock bell_transform_electrons(const SubspaceBlock& block, const SpinSystem& s) {
  if (block.matrix.rows() != 8 || block.basis.size() != 8 || s.size() != 4)
    throw std::invalid_argument("Bell transform expects the 8-dim zero-projection four-spin block");
  using namespace four_spin;
  const int n = 4;
  auto position = [&](int n1, int e2, int e3, int n4) -> Eigen::Index {
    basis::Index idx = 0;
    if (n1) idx |= basis::site_mask(n, kNucleus1);
    if (e2) idx |= basis::site_mask(n, kElectron2);
    if (e3) idx |= basis::site_mask(n, kElectron3);
    if (n4) idx |= basis::site_mask(n, kNucleus4);
    for (std::size_t k = 0; k < block.basis.size(); ++k)
      if (block.basis[k] == idx) return static_cast<Eigen::Index>(k);
    throw std::invalid_argument("block does not contain the zero-projection states");
  };

  const double r = 1.0 / std::sqrt(2.0);
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(8, 8);
  BellBlock out;
  const char* arrow[2] = {"↑", "↓"};
  Eigen::Index col = 0;
  for (int n1 = 0; n1 < 2; ++n1)
    for (int n4 = 0; n4 < 2; ++n4)
      for (int sign : {-1, +1}) {
        u(position(n1, 0, 1, n4), col) = r;
        u(position(n1, 1, 0, n4), col) = sign * r;
        out.labels.push_back(std::string(arrow[n1]) + (sign < 0 ? "-" : "+") + arrow[n4]);
        ++col;
      }
  out.matrix = u.adjoint() * block.matrix * u;
  return out;
}

std::string basis_label(const SpinSystem& s, basis::Index state) {
  std::string out;
  for (int i = 0; i < s.size(); ++i) {
    out += basis::is_down(state, s.size(), i) ? "↓" : "↑";
    if (s.axis_of(i)) out += "'";
  }
  return out;
}

void write_matrix_csv(std::ostream& os, const Eigen::MatrixXcd& m) {
  const auto old = os.precision(17);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) os << ',';
      os << m(r, c).real() << ',' << m(r, c).imag();
    }
    os << '\n';
  }
  os.precision(old);
}

}  // namespace spindiff
