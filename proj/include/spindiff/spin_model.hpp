#pragma once

// Spin systems, Hamiltonian terms and exact matrix construction.

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "spindiff/basis.hpp"

namespace spindiff {

enum class Species { nuclear, electron };

struct SpinSite {
  int id = 0;
  Species species = Species::nuclear;
  std::string label;
};

// Term variants. Coefficients are angular frequencies; spin operators have
// eigenvalues +-1/2.
namespace terms {

/// sign * omega * S^z
struct Zeeman {
  int site;
  double omega;
  int sign = +1;
};
/// a_zz * S^z I^z
struct HyperfineSecular {
  int electron;
  int nucleus;
  double a_zz;
};
/// a_zx * S^z I^x
struct HyperfinePseudosecular {
  int electron;
  int nucleus;
  double a_zx;
};
/// j_d * (S^x S^x + S^y S^y)
struct ElectronFlipFlop {
  int first;
  int second;
  double j_d;
};
/// j_xy * (I^x I^x + I^y I^y)
struct NuclearXY {
  int first;
  int second;
  double j_xy;
};
/// j_zz * I^z I^z
struct NuclearIsing {
  int first;
  int second;
  double j_zz;
};
/// omega_x * I^x
struct LocalTransverse {
  int site;
  double omega_x;
};
/// omega_z * I^z
struct LocalLongitudinal {
  int site;
  double omega_z;
};

}  // namespace terms

using HamiltonianTerm =
    std::variant<terms::Zeeman, terms::HyperfineSecular, terms::HyperfinePseudosecular,
                 terms::ElectronFlipFlop, terms::NuclearXY, terms::NuclearIsing,
                 terms::LocalTransverse, terms::LocalLongitudinal>;

/// Signed prefactor of the term's operator.
double coefficient(const HamiltonianTerm& term);
/// True when the term is diagonal in the product basis.
bool is_diagonal(const HamiltonianTerm& term);
/// Sites the term acts on, one or two entries.
std::vector<int> term_sites(const HamiltonianTerm& term);
std::string describe(const HamiltonianTerm& term);

enum class Frame { laboratory, hyperfine, rotating };

/// Local rotation applied to a nucleus when moving to the hyperfine frame:
/// the rotated axis is (sin_theta, 0, cos_theta) = (A_zx, 0, A_zz) / norm.
struct HyperfineAxis {
  int nucleus = 0;
  int electron = 0;
  double norm = 0.0;
  double cos_theta = 1.0;
  double sin_theta = 0.0;
};

/// Immutable spin-1/2 system: sites plus Hamiltonian terms.
class SpinSystem {
 public:
  SpinSystem(std::vector<SpinSite> sites, std::vector<HamiltonianTerm> terms,
             Frame frame = Frame::laboratory, std::vector<HyperfineAxis> axes = {});

  int size() const { return static_cast<int>(sites_.size()); }
  basis::Index dim() const { return basis::dimension(size()); }
  const std::vector<SpinSite>& sites() const { return sites_; }
  const std::vector<HamiltonianTerm>& terms() const { return terms_; }
  Frame frame() const { return frame_; }
  const std::vector<HyperfineAxis>& axes() const { return axes_; }
  const HyperfineAxis* axis_of(int nucleus) const;

  std::vector<int> electron_sites() const;
  std::vector<int> nuclear_sites() const;
  bool is_electron(int site) const { return sites_.at(site).species == Species::electron; }

 private:
  std::vector<SpinSite> sites_;
  std::vector<HamiltonianTerm> terms_;
  Frame frame_;
  std::vector<HyperfineAxis> axes_;
};

/// Calls emit(row, value) for every nonzero <row|term|col>.
template <class Emit>
void for_each_element(const HamiltonianTerm& term, int n, basis::Index col, Emit&& emit) {
  using basis::site_mask;
  using basis::spin_z;
  std::visit(
      [&](const auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, terms::Zeeman>) {
          emit(col, t.sign * t.omega * spin_z(col, n, t.site));
        } else if constexpr (std::is_same_v<T, terms::LocalLongitudinal>) {
          emit(col, t.omega_z * spin_z(col, n, t.site));
        } else if constexpr (std::is_same_v<T, terms::LocalTransverse>) {
          emit(col ^ site_mask(n, t.site), 0.5 * t.omega_x);
        } else if constexpr (std::is_same_v<T, terms::HyperfineSecular>) {
          emit(col, t.a_zz * spin_z(col, n, t.electron) * spin_z(col, n, t.nucleus));
        } else if constexpr (std::is_same_v<T, terms::HyperfinePseudosecular>) {
          emit(col ^ site_mask(n, t.nucleus), 0.5 * t.a_zx * spin_z(col, n, t.electron));
        } else if constexpr (std::is_same_v<T, terms::NuclearIsing>) {
          emit(col, t.j_zz * spin_z(col, n, t.first) * spin_z(col, n, t.second));
        } else {
          // flip-flop: (S+S- + S-S+)/2 connects |ud> and |du> with 1/2
          const int a = t.first;
          const int b = t.second;
          double c = 0.0;
          if constexpr (std::is_same_v<T, terms::ElectronFlipFlop>) c = t.j_d;
          else c = t.j_xy;
          if (basis::is_down(col, n, a) != basis::is_down(col, n, b))
            emit(col ^ (site_mask(n, a) | site_mask(n, b)), 0.5 * c);
        }
      },
      term);
}

/// Four-spin cluster parameters: nucleus 1 - electron 2 - electron 3 - nucleus 4.
/// All values rad/s.
struct FourSpinParams {
  double omega_i = 0.0;  ///< nuclear Zeeman, positive
  double omega_s = 0.0;  ///< electron Zeeman, positive
  double a_zz12 = 0.0;
  double a_zx12 = 0.0;
  double a_zz34 = 0.0;
  double a_zx34 = 0.0;
  double j_d = 0.0;

  double delta12() const;
  double delta34() const;
  /// Zeeman frequencies from the field with the standard gyromagnetic ratios.
  static FourSpinParams at_field(double tesla);
  void validate() const;
};

namespace four_spin {
inline constexpr int kNucleus1 = 0;
inline constexpr int kElectron2 = 1;
inline constexpr int kElectron3 = 2;
inline constexpr int kNucleus4 = 3;
}  // namespace four_spin

SpinSystem build_four_spin(const FourSpinParams& p);

/// Largest system assembled densely.
inline constexpr int kDenseSiteLimit = 14;

Eigen::MatrixXcd to_matrix(const SpinSystem& s);

/// Rotates every hyperfine-coupled nucleus so that its hyperfine vector is the
/// local z axis. The nuclear Zeeman splits into longitudinal and transverse parts.
SpinSystem rotate_hyperfine_frame(const SpinSystem& s);

/// Total electron S^z defining a block.
struct SubspaceSelector {
  double electron_projection = 0.0;
};

struct SubspaceBlock {
  Eigen::MatrixXcd matrix;
  std::vector<basis::Index> basis;  ///< ascending full-space indices
};

/// Electron projection of a basis state.
double electron_projection(const SpinSystem& s, basis::Index state);

SubspaceBlock project_subspace(const Eigen::MatrixXcd& h, const SpinSystem& s,
                               SubspaceSelector sel);

struct BellBlock {
  Eigen::MatrixXcd matrix;
  std::vector<std::string> labels;
};

/// Rewrites the zero-projection four-spin block in the electron singlet/triplet
/// basis |+-> = (|ud> +- |du>)/sqrt2. Ordering: nucleus 1 outer, then nucleus 4,
/// then (-, +).
BellBlock bell_transform_electrons(const SubspaceBlock& block, const SpinSystem& s);

/// Ket label such as "↑'↓↑↓'"; nuclei rotated into the hyperfine frame are primed.
std::string basis_label(const SpinSystem& s, basis::Index state);

/// Rows of "re,im" pairs.
void write_matrix_csv(std::ostream& os, const Eigen::MatrixXcd& m);

}  // namespace spindiff
