#pragma once

// Finite-dimensional checks of the spectral inequality
//
//   sum |a_j|^2 <= C e^{C sqrt(Lambda)} int_0^S0 kappa^2(s)
//                  || sum a_j cosh(s sqrt(lambda_j)) u_j ||^2_{L2(omega)} ds,
//
// and of the augmented elliptic field behind its proof.

#include <vector>

#include "stokesheat/dense.hpp"
#include "stokesheat/hilbert_ops.hpp"
#include "stokesheat/quadrature.hpp"
#include "stokesheat/wide.hpp"

namespace stokesheat {

/// Bump exp(-1/((s-a)(b-s))) on (a, b), scaled to peak 1.
class Kernel {
 public:
  Kernel(double S0, double a, double b);
  /// Support [S0/4, 3 S0/4].
  static Kernel canonical(double S0 = 1.0);

  double S0() const noexcept { return S0_; }
  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  double value(double s) const;
  /// log kappa(s); -inf outside the support.
  Wide log_value(Wide s) const;

 private:
  double S0_, a_, b_;
};

/// Composite Gauss rule on the kernel support, refined by panel doubling
/// until int kappa^2 and int kappa^2 cosh^2(s sqrt(max_lambda)) both settle
/// to `rel_tol`. One rule serves every entry so that K stays a Gram matrix.
QuadratureRule<Wide> kernel_rule(const Kernel& kernel, double max_lambda,
                                 double rel_tol = 1e-10);

/// int kappa^2 ds on the rule above.
double kernel_l2_squared(const Kernel& kernel, double rel_tol = 1e-10);

struct WeightedGramian {
  std::vector<std::size_t> indices;  // basis modes with lambda <= Lambda
  Matrix<Wide> k;
};

/// K_jl = M_jl int kappa^2 cosh(s sqrt(lambda_j)) cosh(s sqrt(lambda_l)) ds.
WeightedGramian weighted_gramian(const EigenBasis& basis,
                                 const ModalGramian& gram, double lambda,
                                 const Kernel& kernel);
WeightedGramian weighted_gramian(const EigenBasis& basis, double lambda,
                                 const ObservationRegion& region,
                                 const Kernel& kernel);

struct LineFit {
  double slope = 0;
  double intercept = 0;
  double r_squared = 0;
  std::size_t points = 0;
};

/// Ordinary least squares y = slope x + intercept.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

struct SpecIneqRow {
  double lambda = 0;
  std::size_t dim = 0;
  Wide min_eig = 0;
  Wide trace = 0;
  Wide min_eig_m = 0;  // smallest eigenvalue of M on the same modes
  double implied_constant = 0;  // C with (1/C) e^{-C sqrt(Lambda)} = min_eig
  bool violation = false;       // min_eig <= -1e-10 trace
};

struct SpecIneqReport {
  std::vector<SpecIneqRow> rows;
  LineFit fit;  // -log(min_eig) against sqrt(Lambda)
  double kernel_l2 = 0;
  bool any_violation = false;
};

SpecIneqReport spec_ineq_report(const EigenBasis& basis,
                                const std::vector<double>& lambdas,
                                const ObservationRegion& region,
                                const Kernel& kernel);

/// Solves (1/C) e^{-C sqrt(Lambda)} = value for C > 0.
double implied_constant(double lambda, Wide value);

// ---- augmented field -----------------------------------------------------------

struct AugmentedJet {
  double U1 = 0, U2 = 0, P = 0;
  double dsU1 = 0, dsU2 = 0, dssU1 = 0, dssU2 = 0;
  double U1_x1 = 0, U2_x2 = 0;
  double lapU1 = 0, lapU2 = 0, U2_x1x1 = 0;
  double P_x1 = 0, P_x2 = 0, P_x1x1 = 0, lapP = 0;
  double gauge = 0;  // c_P(s)
};

/// U = sum a_j cosh(sqrt(lambda_j) s) u_j and
/// P = sum a_j cosh(sqrt(lambda_j) s) p_j + c_P(s), with c_P chosen so that P
/// has zero mean over the gauge region.
class AugmentedField {
 public:
  AugmentedField(const EigenBasis& basis, std::vector<double> a, double lambda,
                 const ObservationRegion& gauge_region,
                 std::vector<double> s_grid = {});

  AugmentedJet eval(double s, double x1, double x2) const;
  double gauge(double s) const;
  /// Adds a constant to c_P (the residuals must not notice).
  void shift_gauge(double offset) { gauge_offset_ += offset; }

  const std::vector<double>& s_grid() const noexcept { return s_grid_; }
  /// c_P sampled on s_grid.
  std::vector<double> gauge_samples() const;
  /// Mean of the mode pressures over the gauge region, per supported mode.
  const std::vector<double>& pressure_means() const noexcept { return pmean_; }
  const std::vector<std::size_t>& support() const noexcept { return support_; }
  int max_k() const noexcept { return max_k_; }

 private:
  const EigenBasis* basis_;
  std::vector<std::size_t> support_;
  std::vector<double> a_;      // per supported mode
  std::vector<double> sqrt_lambda_;
  std::vector<double> pmean_;
  std::vector<double> s_grid_;
  double gauge_offset_ = 0;
  int max_k_ = 0;
};

AugmentedField augmented_field(const EigenBasis& basis,
                               const std::vector<double>& a, double lambda,
                               const ObservationRegion& gauge_region,
                               std::vector<double> s_grid);

struct SampleGrid {
  std::vector<double> s, x1, x2;
  /// n^3 points: s and x1 cell centres, x2 including both walls.
  static SampleGrid uniform(double S0, int n);
};

struct AugmentedResiduals {
  double momentum1 = 0, momentum2 = 0, divergence = 0;
  double dirichlet = 0, ventcel = 0, pressure_laplace = 0;
  double max() const;
};

/// Sup-norm residuals of the augmented system, each divided by the sup of
/// the magnitudes of the terms entering that equation.
AugmentedResiduals residual_augmented(const AugmentedField& field,
                                      const SampleGrid& grid);

}  // namespace stokesheat
