#pragma once

// Null controls by a dyadic low-frequency cascade: on each stage the state
// evolves freely, then a minimal-norm Gramian control on the final window
// steers the modes below the stage cutoff to zero.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stokesheat/dense.hpp"
#include "stokesheat/hilbert_ops.hpp"
#include "stokesheat/spectral_inequality.hpp"

namespace stokesheat {

struct Stage {
  int index = 0;
  double start = 0;
  double tau = 0;      // T 2^{-(k+1)}
  double passive = 0;  // (1 - epsilon) tau
  double window = 0;   // epsilon tau
  double lambda = 0;   // cutoff after clipping
  bool clipped = false;

  double window_start() const noexcept { return start + passive; }
  double end() const noexcept { return start + tau; }
};

struct LRSchedule {
  double T = 1, gamma = 1.5, epsilon = 0.5, lambda_cap = 0;
  std::vector<Stage> stages;

  double max_lambda() const;
};

/// Stages tau_k = T 2^{-(k+1)} with cutoff (epsilon tau_k)^{-(1+gamma)}
/// clipped at lambda_cap, until tau_k drops below 1e-4 T.
LRSchedule make_schedule(double T, double gamma, double epsilon,
                         double lambda_cap);

struct StageGramian {
  std::vector<std::size_t> indices;  // modes with lambda <= Lambda
  Matrix<double> g;
};

/// G_jl = M_jl (1 - e^{-(lambda_j + lambda_l) w}) / (lambda_j + lambda_l).
StageGramian stage_gramian(const EigenBasis& basis, const ModalGramian& gram,
                           double lambda, double w);
StageGramian stage_gramian(const EigenBasis& basis, double lambda,
                           const ObservationRegion& region, double w);

/// The control f(t) = -sum_j c_j e^{-lambda_j (t1 - t)} u_j 1_omega on
/// [t0, t1], with its diagnostics.
struct ControlSegment {
  double t0 = 0, t1 = 0;
  std::vector<std::size_t> indices;
  std::vector<double> c;
  double cost = 0;          // mu^T G^+ mu, the L2 norm squared of f
  double residual = 0;      // ||mu - G G^+ mu||
  double cond_estimate = 0; // largest / smallest eigenvalue of G
  std::size_t rank = 0;     // eigenvalues kept by the pseudo-inverse
  bool threshold_binding = false;  // rank < indices.size()

  double duration() const noexcept { return t1 - t0; }
};

/// Minimal-norm control on a window of length w that starts from `state`.
ControlSegment stage_control(const EigenBasis& basis, const ModalGramian& gram,
                             const StateVector& state, double lambda, double t0,
                             double w, double reg_threshold = 1e-12);

/// Exact modal propagation across the segment; every basis mode receives
/// forcing through M.
StateVector advance(const EigenBasis& basis, const ModalGramian& gram,
                    const StateVector& state, const ControlSegment& seg);

/// Right-hand side of the controlled modal ODE at time t in the segment:
/// -lambda_l a_l - sum_j M_lj c_j e^{-lambda_j (t1 - t)}.
std::vector<double> controlled_rhs(const EigenBasis& basis,
                                   const ModalGramian& gram,
                                   const ControlSegment& seg, double t,
                                   std::span<const double> a);

struct StageRecord {
  Stage stage;
  double pre_norm = 0;      // at stage start
  double post_norm = 0;     // at stage end
  double low_residual = 0;  // ||Pi_{Lambda_k} z|| at stage end
  double high_norm = 0;     // ||(1 - Pi_{Lambda_k}) z|| at stage end
  double cost = 0;
  double cond_estimate = 0;
  std::size_t dim = 0, rank = 0;
  bool threshold_binding = false;
};

/// One inequality of the telescoping chain, on the free trajectory
/// e^{-tA} z0: rho(tau) end_norm2 <= observed + rho(tau/2) start_norm2.
struct TelescopingTerm {
  double tau = 0;
  double start_norm2 = 0;
  double end_norm2 = 0;
  double observed = 0;  // int over the window of ||e^{-tA} z0||^2_{L2(omega)}
};

struct RunReport {
  std::string basis_ref;
  LRSchedule schedule;
  double reg_threshold = 0;
  double z0_norm = 0;
  double final_norm = 0;
  double total_cost = 0;
  double max_cond = 0;
  std::vector<StageRecord> stages;
  std::vector<TelescopingTerm> telescoping;
  double c1 = 0;  // +inf when no finite constant was found
};

/// Passive then controlled segment per stage, then free decay up to T.
RunReport run_lr(const EigenBasis& basis, const ModalGramian& gram,
                 const StateVector& z0, const LRSchedule& schedule,
                 double reg_threshold = 1e-12);
RunReport run_lr(const EigenBasis& basis, const StateVector& z0,
                 const LRSchedule& schedule, const ObservationRegion& region,
                 double reg_threshold = 1e-12);

std::vector<TelescopingTerm> telescoping_terms(const EigenBasis& basis,
                                               const ModalGramian& gram,
                                               const StateVector& z0,
                                               const LRSchedule& schedule);

/// rho(tau) = exp(-3 C / (epsilon tau)^gamma) / (2 C).
bool telescoping_holds(std::span<const TelescopingTerm> terms, double c,
                       double epsilon, double gamma);

/// Threshold above which every telescoping inequality holds: the infimum of
/// C such that they hold for all C' >= C. Zero if they hold on the whole
/// scan range, +inf if they fail at its top.
double telescoping_constant(std::span<const TelescopingTerm> terms,
                            double epsilon, double gamma);

/// Unit state with normal random coefficients on the `count` lowest modes.
StateVector random_low_mode_state(const EigenBasis& basis, std::size_t count,
                                  std::uint64_t seed);

// ---- observability ---------------------------------------------------------------

struct ObsConstant {
  double value = 0;  // C_obs
  std::vector<std::size_t> indices;
  std::vector<double> direction;  // extremal coefficients, unit norm
};

/// Largest c with e^{-2 lambda T}-weighted energy F a = c O a, where
/// O = int_0^T e^{-tA} B B^* e^{-tA} dt restricted to lambda <= Lambda.
ObsConstant obs_constant(const EigenBasis& basis, const ModalGramian& gram,
                         double lambda, double T);
ObsConstant obs_constant(const EigenBasis& basis, double lambda, double T,
                         const ObservationRegion& region);

enum class SweepKind { horizon, cutoff };

/// Least squares of log(value) against 1/T^gamma (horizon sweep) or
/// sqrt(Lambda) (cutoff sweep). Needs at least four points.
LineFit cost_and_constant_fit(SweepKind kind, std::span<const double> params,
                              std::span<const double> values,
                              double gamma = 1.5);

// ---- report encodings --------------------------------------------------------------

inline constexpr int kRunReportVersion = 1;

std::string run_report_csv(const RunReport& report);
std::string run_report_json(const RunReport& report);

}  // namespace stokesheat
