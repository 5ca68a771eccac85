#pragma once

// Eigenmodes of the coupled Stokes / boundary-heat operator on the periodic
// strip (0, 2pi) x (0, 1).
//
// Each Fourier sector k >= 1 reduces to a fourth-order ODE for the stream
// profile phi = u2-hat:
//
//   (D^2 - k^2)(D^2 - k^2 + lambda) phi = 0,
//   phi(0) = phi'(0) = phi'(1) = 0,
//   k^2 (k^2 - lambda) phi(1) - phi'''(1) = 0,
//
// with u1-hat = (i/k) phi' and p-hat = (phi''' + (lambda - k^2) phi') / k^2.
// The k = 0 sector decouples into Dirichlet sine modes with u2 = eta = p = 0.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace stokesheat {

enum class Branch { oscillatory, evanescent, degenerate };
enum class Phase { none, cosine, sine };

std::string to_string(Branch b);
std::string to_string(Phase p);
Branch branch_from_string(const std::string& s);
Phase phase_from_string(const std::string& s);

struct SpectralTolerances {
  double degeneracy = 1e-8;          // relative, scaled by max(1, k^2)
  double scan_density = 16.0;        // samples per unit sqrt(lambda)
  double root_tol = 1e-14;           // relative bracket width
  double residual_gate = 1e-8;       // smallest singular value ratio
  double multiplicity_gate = 1e-8;   // second smallest singular value ratio
  int quad_nodes = 64;               // Gauss nodes per panel in x2
};

/// Degeneracy half-width around lambda = k^2.
double degeneracy_width(int k, double rel_tol = 1e-8);

/// Stream profile of a k >= 1 mode. `c` holds the coefficients in the
/// branch's fundamental system (see basis_derivatives).
struct StreamProfile {
  int k = 0;
  double lambda = 0;
  Branch branch = Branch::oscillatory;
  std::array<double, 4> c{};
  double norm_factor = 1;

  /// phi and its first five derivatives at x2, *without* norm_factor.
  std::array<double, 6> derivatives(double x2) const;
  double value(double x2) const { return derivatives(x2)[0]; }
};

/// Derivatives 0..5 of the four fundamental solutions used for the stored
/// coefficients of branch `b`:
///   oscillatory: e^{-kx}, e^{k(x-1)}, cos(bx), sin(bx),   b = sqrt(lambda-k^2)
///   evanescent:  e^{-kx}, e^{k(x-1)}, e^{-bx}, e^{b(x-1)}, b = sqrt(k^2-lambda)
///                (cosh(bx), sinh(bx)/b when b < 1)
///   degenerate:  e^{-kx}, e^{k(x-1)}, 1, x
std::array<std::array<double, 6>, 4> basis_derivatives(int k, double lambda,
                                                       Branch b, double x);

Branch classify_branch(int k, double lambda, double rel_deg_tol = 1e-8);

struct EigenMode {
  int k = 0;
  int n = 0;  // 1-based index within the sector, by eigenvalue
  Phase phase = Phase::none;
  double lambda = 0;
  StreamProfile profile;   // k >= 1
  double amplitude = 0;    // k == 0: u1 = amplitude * sin(n pi x2)
  double eta_trace = 0;    // phi(1) * norm_factor
};

struct FieldValue {
  double u1 = 0, u2 = 0, p = 0, eta = 0;
};

/// Velocity/pressure with the x-derivatives needed to check the mode
/// equations pointwise.
struct FieldJet {
  double u1 = 0, u2 = 0, p = 0;
  double u1_x1 = 0, u1_x2 = 0, u2_x1 = 0, u2_x2 = 0;
  double lap_u1 = 0, lap_u2 = 0;
  double p_x1 = 0, p_x2 = 0, lap_p = 0;
  double u2_x1x1 = 0;
};

struct EigenBasisMetadata {
  int schema_version = 1;
  double lambda_max = 0;
  int k_max = 0;
  SpectralTolerances tolerances;
  int quad_panels = 0;  // x2 panels used for normalization at the cutoff rate
  std::string build_timestamp;
};

struct EigenBasis {
  double cutoff = 0;
  int k_range = 0;
  std::vector<EigenMode> modes;
  EigenBasisMetadata metadata;

  std::size_t size() const noexcept { return modes.size(); }
  std::vector<double> eigenvalues() const;
  /// Content fingerprint (FNV-1a over the mode records), used as basis_ref.
  std::string id() const;
  /// Indices of modes with lambda <= cutoff.
  std::vector<std::size_t> indices_up_to(double cutoff) const;
};

struct Bracket {
  double lo = 0;
  double hi = 0;
};

struct RefinedRoot {
  double lambda = 0;
  Bracket enclosure;
  int evaluations = 0;
};

// ---- operations -----------------------------------------------------------

EigenMode zero_mode(int n);

/// Row-normalized 4x4 boundary determinant for sector k >= 1. Its zeros in
/// lambda are the sector eigenvalues. Throws degenerate_branch inside the
/// guard |lambda - k^2| <= delta_deg.
double dispersion(int k, double lambda, double rel_deg_tol = 1e-8);

std::vector<Bracket> bracket_roots(int k, double lambda_max,
                                   double density = 16.0,
                                   double rel_deg_tol = 1e-8);

RefinedRoot refine_root(int k, Bracket bracket, double tol = 1e-14,
                        double rel_deg_tol = 1e-8);

EigenMode build_mode(int k, double lambda, Phase phase, int n = 0,
                     const SpectralTolerances& tol = {});

/// Exact pointwise evaluation; x1 in [0, 2pi), x2 in [0, 1].
FieldValue eval_mode(const EigenMode& mode, double x1, double x2);
FieldJet eval_jet(const EigenMode& mode, double x1, double x2);

struct AssembleOptions {
  SpectralTolerances tol;
  std::string build_timestamp;  // recorded verbatim
};

EigenBasis assemble_basis(double lambda_max, int k_max,
                          const AssembleOptions& opts = {});

/// Smallest k_max that is guaranteed to pass the completeness check
/// (every sector eigenvalue exceeds k^2).
int default_k_max(double lambda_max);

/// All roots of sector k up to lambda_max, refined.
std::vector<double> sector_eigenvalues(int k, double lambda_max,
                                       const SpectralTolerances& tol = {});

struct OracleEigs {
  std::vector<double> lambda;          // Richardson-extrapolated, ascending
  std::vector<double> error_estimate;  // |extrapolated - fine-grid value|
  std::vector<double> coarse, fine;    // raw values on N and 2N
};

/// Independent finite-difference oracle for sector k >= 0: a staggered
/// primitive-variable discretization in x2 (no stream function), solved by
/// shift-invert block subspace iteration on grids N and 2N.
OracleEigs oracle_eigs(int k, int N, int count);

}  // namespace stokesheat
