#pragma once

// Modal representation of the state space: velocity/trace pairs expanded in
// an orthonormal EigenBasis.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "stokesheat/dense.hpp"
#include "stokesheat/quadrature.hpp"
#include "stokesheat/spectral_core.hpp"
#include "stokesheat/wide.hpp"

namespace stokesheat {

struct StateVector {
  std::string basis_ref;
  std::vector<double> a;

  static StateVector zeros(const EigenBasis& basis);
  static StateVector unit(const EigenBasis& basis, std::size_t j);
  double norm() const;
};

/// Axis-aligned observation rectangle [x1_lo, x1_hi] x [x2_lo, x2_hi].
class ObservationRegion {
 public:
  /// Validated: 0 <= x1_lo < x1_hi <= 2pi and 0 < x2_lo < x2_hi < 1.
  ObservationRegion(double x1_lo, double x1_hi, double x2_lo, double x2_hi);
  /// The closure of the whole strip; only used for Parseval-type checks.
  static ObservationRegion whole_domain();

  double x1_lo() const noexcept { return x1_lo_; }
  double x1_hi() const noexcept { return x1_hi_; }
  double x2_lo() const noexcept { return x2_lo_; }
  double x2_hi() const noexcept { return x2_hi_; }
  double area() const noexcept { return (x1_hi_ - x1_lo_) * (x2_hi_ - x2_lo_); }
  bool contains(double x1, double x2) const noexcept;
  bool operator==(const ObservationRegion&) const = default;

 private:
  ObservationRegion() = default;
  double x1_lo_ = 0, x1_hi_ = 0, x2_lo_ = 0, x2_hi_ = 0;
};

struct ModalGramian {
  std::string basis_ref;
  ObservationRegion region;
  Matrix<Wide> wide;  // M_jl = int_omega u_j . u_l, binary128
  Matrix<double> m;   // the same, rounded

  std::size_t size() const noexcept { return m.rows(); }
};

// ---- state operations ------------------------------------------------------

double inner(const StateVector& x, const StateVector& y);
StateVector semigroup(const EigenBasis& basis, const StateVector& x, double t);
StateVector project(const EigenBasis& basis, const StateVector& x,
                    double lambda);

/// Pointwise field of a state: sum_j a_j (u, p, eta)_j.
FieldValue eval_state(const EigenBasis& basis, const StateVector& x, double x1,
                      double x2);

// ---- Gramians ----------------------------------------------------------------

/// x2 quadrature used for Gramians over [lo, hi]: composite 64-point Gauss
/// with enough panels for the fastest profile in the basis.
QuadratureRule<Wide> gramian_rule(const EigenBasis& basis, double lo, double hi);

ModalGramian obs_gramian(const EigenBasis& basis,
                         const ObservationRegion& region);

/// N_jl = int_I eta_j eta_l dx1 (closed form).
Matrix<double> trace_gramian(const EigenBasis& basis);

/// H inner products of the basis (whole-domain M plus N); identity for an
/// orthonormal basis.
Matrix<double> h_gram(const EigenBasis& basis);

/// -int grad u_i : grad u_j - int eta_i' eta_j', which equals -lambda_i
/// delta_ij for eigenmodes.
Matrix<double> rayleigh_matrix(const EigenBasis& basis);

/// Forcing on every basis mode from the control f = sum_j g_j u_j 1_omega,
/// g indexed by `controlled` (basis indices): returns M[:, controlled] g.
std::vector<double> apply_B(const ModalGramian& gram,
                            std::span<const std::size_t> controlled,
                            std::span<const double> g);

// ---- persistence -------------------------------------------------------------

inline constexpr int kBasisSchemaVersion = 1;

void save_basis(const EigenBasis& basis, const std::filesystem::path& path);
EigenBasis load_basis(const std::filesystem::path& path);

/// Writes `content` to `path` through a temporary file and a rename.
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace stokesheat
