#include "stokesheat/control_loop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "stokesheat/error.hpp"
#include "stokesheat/format.hpp"
#include "stokesheat/kernels.hpp"

namespace stokesheat {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// (1 - e^{-s w}) / s, with the s -> 0 limit.
template <class T>
T decay_integral(T s, T w) {
  if (s == T(0)) return w;
  return -num::expm1(-s * w) / s;
}

void check_gram(const EigenBasis& basis, const ModalGramian& gram) {
  require(gram.basis_ref == basis.id() && gram.size() == basis.size(),
          "Gramian belongs to another basis");
}

void check_state(const EigenBasis& basis, const StateVector& x) {
  require(x.a.size() == basis.size() && x.basis_ref == basis.id(),
          "state vector does not belong to this basis");
}

}  // namespace

// ---- schedule ------------------------------------------------------------------

double LRSchedule::max_lambda() const {
  double m = 0;
  for (const auto& s : stages) m = std::max(m, s.lambda);
  return m;
}

LRSchedule make_schedule(double T, double gamma, double epsilon,
                         double lambda_cap) {
  require(T > 0 && T <= 1, "schedule: need 0 < T <= 1");
  require(gamma > 1, "schedule: gamma must be > 1");
  require(epsilon > 0 && epsilon < 1, "schedule: need 0 < epsilon < 1");
  require(lambda_cap > 0, "schedule: Lambda_cap must be positive");
  LRSchedule s{T, gamma, epsilon, lambda_cap, {}};
  double start = 0;
  for (int k = 0;; ++k) {
    const double tau = std::ldexp(T, -(k + 1));
    if (tau < 1e-4 * T) break;
    Stage st;
    st.index = k;
    st.start = start;
    st.tau = tau;
    st.window = epsilon * tau;
    st.passive = tau - st.window;
    const double lam = std::pow(epsilon * tau, -(1 + gamma));
    st.clipped = lam > lambda_cap;
    st.lambda = st.clipped ? lambda_cap : lam;
    s.stages.push_back(st);
    start += tau;
  }
  return s;
}

// ---- Gramians and controls -------------------------------------------------------

StageGramian stage_gramian(const EigenBasis& basis, const ModalGramian& gram,
                           double lambda, double w) {
  check_gram(basis, gram);
  require(w > 0, "stage_gramian: window must be positive");
  if (lambda > basis.cutoff)
    fail(ErrorKind::incomplete_basis, "stage_gramian: Lambda exceeds the basis cutoff");
  StageGramian out;
  out.indices = basis.indices_up_to(lambda);
  const std::size_t n = out.indices.size();
  out.g = Matrix<double>(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t a = out.indices[i], b = out.indices[j];
      const double s = basis.modes[a].lambda + basis.modes[b].lambda;
      out.g(i, j) = gram.m(a, b) * decay_integral(s, w);
    }
  return out;
}

StageGramian stage_gramian(const EigenBasis& basis, double lambda,
                           const ObservationRegion& region, double w) {
  return stage_gramian(basis, obs_gramian(basis, region), lambda, w);
}

ControlSegment stage_control(const EigenBasis& basis, const ModalGramian& gram,
                             const StateVector& state, double lambda, double t0,
                             double w, double reg_threshold) {
  check_state(basis, state);
  require(reg_threshold >= 0 && reg_threshold < 1,
          "stage_control: reg_threshold must lie in [0, 1)");
  const auto sg = stage_gramian(basis, gram, lambda, w);
  ControlSegment seg;
  seg.t0 = t0;
  seg.t1 = t0 + w;
  seg.indices = sg.indices;
  const std::size_t n = sg.indices.size();
  seg.c.assign(n, 0.0);
  if (n == 0) return seg;

  std::vector<double> mu(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = sg.indices[i];
    mu[i] = std::exp(-basis.modes[j].lambda * w) * state.a[j];
  }
  const auto eig = kernels::jacobi_eigen(sg.g);
  if (!eig.converged)
    fail(ErrorKind::configuration, "stage_control: Jacobi did not converge");
  const double dmax = eig.values.back(), dmin = eig.values.front();
  seg.cond_estimate = dmin > 0 ? dmax / dmin : kInf;
  double discarded = 0;
  for (std::size_t q = 0; q < n; ++q) {
    double y = 0;
    for (std::size_t i = 0; i < n; ++i) y += eig.vectors(i, q) * mu[i];
    const double d = eig.values[q];
    if (!(d > reg_threshold * dmax)) {
      discarded += y * y;
      continue;
    }
    ++seg.rank;
    seg.cost += y * y / d;
    for (std::size_t i = 0; i < n; ++i) seg.c[i] += eig.vectors(i, q) * (y / d);
  }
  seg.residual = std::sqrt(discarded);
  seg.threshold_binding = seg.rank < n;
  return seg;
}

StateVector advance(const EigenBasis& basis, const ModalGramian& gram,
                    const StateVector& state, const ControlSegment& seg) {
  check_gram(basis, gram);
  check_state(basis, state);
  require(seg.c.size() == seg.indices.size(),
          "advance: one coefficient per controlled mode");
  for (std::size_t j : seg.indices)
    require(j < basis.size(), "advance: control index outside the basis");
  const double w = seg.duration();
  require(w >= 0, "advance: segment ends before it starts");
  StateVector out = state;
  const auto rows = static_cast<std::ptrdiff_t>(basis.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ll = 0; ll < rows; ++ll) {
    const auto l = static_cast<std::size_t>(ll);
    const double lam_l = basis.modes[l].lambda;
    double forced = 0;
    for (std::size_t i = 0; i < seg.indices.size(); ++i) {
      const std::size_t j = seg.indices[i];
      forced += gram.m(l, j) * seg.c[i] *
                decay_integral(basis.modes[j].lambda + lam_l, w);
    }
    out.a[l] = std::exp(-lam_l * w) * state.a[l] - forced;
  }
  return out;
}

std::vector<double> controlled_rhs(const EigenBasis& basis,
                                   const ModalGramian& gram,
                                   const ControlSegment& seg, double t,
                                   std::span<const double> a) {
  std::vector<double> g(seg.indices.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] = seg.c[i] * std::exp(-basis.modes[seg.indices[i]].lambda * (seg.t1 - t));
  std::vector<double> out(basis.size());
  for (std::size_t l = 0; l < out.size(); ++l) {
    double f = 0;
    for (std::size_t i = 0; i < g.size(); ++i) f += gram.m(l, seg.indices[i]) * g[i];
    out[l] = -basis.modes[l].lambda * a[l] - f;
  }
  return out;
}

// ---- telescoping ---------------------------------------------------------------------

std::vector<TelescopingTerm> telescoping_terms(const EigenBasis& basis,
                                               const ModalGramian& gram,
                                               const StateVector& z0,
                                               const LRSchedule& schedule) {
  check_gram(basis, gram);
  check_state(basis, z0);
  std::vector<std::size_t> sup;
  for (std::size_t j = 0; j < z0.a.size(); ++j)
    if (z0.a[j] != 0.0) sup.push_back(j);
  auto norm2_at = [&](double t) {
    double s = 0;
    for (std::size_t j : sup) {
      const double v = std::exp(-basis.modes[j].lambda * t) * z0.a[j];
      s += v * v;
    }
    return s;
  };
  std::vector<TelescopingTerm> out;
  for (const auto& st : schedule.stages) {
    TelescopingTerm term;
    term.tau = st.tau;
    term.start_norm2 = norm2_at(st.start);
    term.end_norm2 = norm2_at(st.end());
    const double ta = st.window_start();
    double obs = 0;
    for (std::size_t j : sup)
      for (std::size_t l : sup) {
        const double s = basis.modes[j].lambda + basis.modes[l].lambda;
        obs += z0.a[j] * z0.a[l] * gram.m(j, l) * std::exp(-s * ta) *
               decay_integral(s, st.window);
      }
    term.observed = std::max(obs, 0.0);
    out.push_back(term);
  }
  return out;
}

bool telescoping_holds(std::span<const TelescopingTerm> terms, double c,
                       double epsilon, double gamma) {
  require(c > 0, "telescoping_holds: C must be positive");
  // Compared in log space: rho underflows long before the inequality
  // becomes trivial.
  auto log_rho = [&](double tau) {
    return -std::log(2 * c) - 3 * c / std::pow(epsilon * tau, gamma);
  };
  for (const auto& t : terms) {
    if (t.end_norm2 == 0.0) continue;
    const double lhs = log_rho(t.tau) + std::log(t.end_norm2);
    const double a = t.observed > 0 ? std::log(t.observed) : -kInf;
    const double b = t.start_norm2 > 0 ? log_rho(t.tau / 2) + std::log(t.start_norm2)
                                       : -kInf;
    const double hi = std::max(a, b), lo = std::min(a, b);
    const double rhs = hi == -kInf ? -kInf : hi + std::log1p(std::exp(lo - hi));
    if (lhs > rhs) return false;
  }
  return true;
}

double telescoping_constant(std::span<const TelescopingTerm> terms,
                            double epsilon, double gamma) {
  constexpr int kPerDecade = 100;
  constexpr double kLo = -8, kHi = 4;
  const int count = static_cast<int>((kHi - kLo) * kPerDecade) + 1;
  auto grid = [&](int i) { return std::pow(10.0, kLo + double(i) / kPerDecade); };
  int last_bad = -1;
  for (int i = 0; i < count; ++i)
    if (!telescoping_holds(terms, grid(i), epsilon, gamma)) last_bad = i;
  if (last_bad < 0) return 0.0;
  if (last_bad == count - 1) return kInf;
  double lo = grid(last_bad), hi = grid(last_bad + 1);
  for (int it = 0; it < 80 && hi / lo > 1 + 1e-13; ++it) {
    const double mid = std::sqrt(lo * hi);
    (telescoping_holds(terms, mid, epsilon, gamma) ? hi : lo) = mid;
  }
  return hi;
}

StateVector random_low_mode_state(const EigenBasis& basis, std::size_t count,
                                  std::uint64_t seed) {
  require(count <= basis.size(), "random state: more modes than the basis has");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  auto z = StateVector::zeros(basis);
  for (std::size_t j = 0; j < count; ++j) z.a[j] = g(rng);
  const double n = z.norm();
  if (n > 0)
    for (double& v : z.a) v /= n;
  return z;
}

// ---- run -------------------------------------------------------------------------------

RunReport run_lr(const EigenBasis& basis, const ModalGramian& gram,
                 const StateVector& z0, const LRSchedule& schedule,
                 double reg_threshold) {
  check_gram(basis, gram);
  check_state(basis, z0);
  if (schedule.max_lambda() > basis.cutoff)
    fail(ErrorKind::configuration,
         "run_lr: basis cutoff " + fmt17(basis.cutoff) +
             " is below the largest stage cutoff " + fmt17(schedule.max_lambda()));
  RunReport rep;
  rep.basis_ref = basis.id();
  rep.schedule = schedule;
  rep.reg_threshold = reg_threshold;
  rep.z0_norm = z0.norm();

  StateVector z = z0;
  double t = 0;
  for (const auto& st : schedule.stages) {
    StageRecord rec;
    rec.stage = st;
    rec.pre_norm = z.norm();
    z = semigroup(basis, z, st.passive);
    const auto seg = stage_control(basis, gram, z, st.lambda, st.window_start(),
                                   st.window, reg_threshold);
    z = advance(basis, gram, z, seg);
    t = st.end();
    rec.post_norm = z.norm();
    double low = 0, high = 0;
    for (std::size_t j = 0; j < z.a.size(); ++j)
      (basis.modes[j].lambda <= st.lambda ? low : high) += z.a[j] * z.a[j];
    rec.low_residual = std::sqrt(low);
    rec.high_norm = std::sqrt(high);
    rec.cost = seg.cost;
    rec.cond_estimate = seg.cond_estimate;
    rec.dim = seg.indices.size();
    rec.rank = seg.rank;
    rec.threshold_binding = seg.threshold_binding;
    rep.total_cost += seg.cost;
    rep.max_cond = std::max(rep.max_cond, seg.cond_estimate);
    rep.stages.push_back(rec);
  }
  z = semigroup(basis, z, std::max(0.0, schedule.T - t));
  rep.final_norm = z.norm();
  rep.telescoping = telescoping_terms(basis, gram, z0, schedule);
  rep.c1 = telescoping_constant(rep.telescoping, schedule.epsilon, schedule.gamma);
  return rep;
}

RunReport run_lr(const EigenBasis& basis, const StateVector& z0,
                 const LRSchedule& schedule, const ObservationRegion& region,
                 double reg_threshold) {
  if (schedule.max_lambda() > basis.cutoff)
    fail(ErrorKind::configuration, "run_lr: basis cutoff below the largest stage cutoff");
  return run_lr(basis, obs_gramian(basis, region), z0, schedule, reg_threshold);
}

// ---- observability --------------------------------------------------------------------

ObsConstant obs_constant(const EigenBasis& basis, const ModalGramian& gram,
                         double lambda, double T) {
  check_gram(basis, gram);
  require(T > 0, "obs_constant: T must be positive");
  if (lambda > basis.cutoff)
    fail(ErrorKind::incomplete_basis, "obs_constant: Lambda exceeds the basis cutoff");
  ObsConstant out;
  out.indices = basis.indices_up_to(lambda);
  const std::size_t n = out.indices.size();
  require(n > 0, "obs_constant: no modes below Lambda");

  Matrix<Wide> o(n, n);
  std::vector<Wide> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Wide li = basis.modes[out.indices[i]].lambda;
    d[i] = num::exp(-li * Wide(T));
    for (std::size_t j = 0; j < n; ++j) {
      const Wide s = li + Wide(basis.modes[out.indices[j]].lambda);
      o(i, j) = gram.wide(out.indices[i], out.indices[j]) * decay_integral(s, Wide(T));
    }
  }
  const auto chol = kernels::cholesky(o, Wide(64) * num::epsilon<Wide>());
  if (!chol.lower) {
    const auto eig = kernels::jacobi_eigen(matrix_cast<double>(o));
    std::ostringstream msg;
    msg << "observation Gramian is singular at working precision (pivot "
        << chol.failed_pivot << " of " << n << "); near-null direction:";
    for (std::size_t i = 0; i < n; ++i)
      msg << ' ' << out.indices[i] << ':' << fmt17(eig.vectors(i, 0));
    fail(ErrorKind::observability_defect, msg.str());
  }
  const auto& l = *chol.lower;
  // L^{-1} F L^{-T} = X X^T with X = L^{-1} diag(e^{-lambda T}).
  Matrix<Wide> xt(n, n);  // row j holds column j of X
#pragma omp parallel for schedule(dynamic, 4)
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<Wide> col(n, Wide(0));
    col[j] = d[j];
    kernels::forward_substitute(l, col);
    for (std::size_t i = 0; i < n; ++i) xt(j, i) = col[i];
  }
  Matrix<Wide> x(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) x(i, j) = xt(j, i);
  // The largest eigenvalue is well conditioned in absolute terms, so double
  // precision is enough once W is formed.
  const auto w = matrix_cast<double>(kernels::gram_rows(x));
  const auto eig = kernels::jacobi_eigen(w);
  if (!eig.converged)
    fail(ErrorKind::configuration, "obs_constant: Jacobi did not converge");
  out.value = eig.values.back();
  std::vector<Wide> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = eig.vectors(i, n - 1);
  kernels::backward_substitute_transposed(l, y);
  Wide nrm = 0;
  for (const Wide& v : y) nrm += v * v;
  nrm = num::sqrt(nrm);
  out.direction.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.direction[i] = static_cast<double>(y[i] / nrm);
  return out;
}

ObsConstant obs_constant(const EigenBasis& basis, double lambda, double T,
                         const ObservationRegion& region) {
  return obs_constant(basis, obs_gramian(basis, region), lambda, T);
}

LineFit cost_and_constant_fit(SweepKind kind, std::span<const double> params,
                              std::span<const double> values, double gamma) {
  require(params.size() == values.size(), "fit: parameters and values differ in length");
  require(params.size() >= 4, "fit: need at least four data points");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < params.size(); ++i) {
    require(params[i] > 0, "fit: sweep parameters must be positive");
    require(values[i] > 0 && std::isfinite(values[i]),
            "fit: values must be positive and finite");
    x.push_back(kind == SweepKind::horizon ? std::pow(params[i], -gamma)
                                           : std::sqrt(params[i]));
    y.push_back(std::log(values[i]));
  }
  return fit_line(x, y);
}

// ---- encodings ----------------------------------------------------------------------------

std::string run_report_csv(const RunReport& r) {
  std::ostringstream out;
  out << "# stokesheat run report v" << kRunReportVersion << '\n';
  out << "stage,tau,Lambda,pre_norm,post_norm,low_residual,cost,cond_estimate,"
         "high_norm,dim,rank,clipped,threshold_binding\n";
  for (const auto& s : r.stages) {
    out << s.stage.index << ',' << fmt17(s.stage.tau) << ',' << fmt17(s.stage.lambda)
        << ',' << fmt17(s.pre_norm) << ',' << fmt17(s.post_norm) << ','
        << fmt17(s.low_residual) << ',' << fmt17(s.cost) << ','
        << fmt17(s.cond_estimate) << ',' << fmt17(s.high_norm) << ',' << s.dim << ','
        << s.rank << ',' << int(s.stage.clipped) << ',' << int(s.threshold_binding)
        << '\n';
  }
  return out.str();
}

std::string run_report_json(const RunReport& r) {
  std::ostringstream out;
  const auto& s = r.schedule;
  out << "{\n";
  out << "  \"kind\": \"stokesheat.run_report\",\n";
  out << "  \"version\": " << kRunReportVersion << ",\n";
  out << "  \"basis_ref\": \"" << r.basis_ref << "\",\n";
  out << "  \"schedule\": {\"T\": " << json_number(s.T) << ", \"gamma\": "
      << json_number(s.gamma) << ", \"epsilon\": " << json_number(s.epsilon)
      << ", \"Lambda_cap\": " << json_number(s.lambda_cap)
      << ", \"stages\": " << s.stages.size() << "},\n";
  out << "  \"reg_threshold\": " << json_number(r.reg_threshold) << ",\n";
  out << "  \"z0_norm\": " << json_number(r.z0_norm) << ",\n";
  out << "  \"final_norm\": " << json_number(r.final_norm) << ",\n";
  out << "  \"total_cost\": " << json_number(r.total_cost) << ",\n";
  out << "  \"max_cond\": " << json_number(r.max_cond) << ",\n";
  out << "  \"C1\": " << json_number(r.c1) << ",\n";
  out << "  \"telescoping\": [";
  for (std::size_t i = 0; i < r.telescoping.size(); ++i) {
    const auto& t = r.telescoping[i];
    out << (i ? ",\n" : "\n") << "    {\"tau\": " << json_number(t.tau)
        << ", \"start_norm2\": " << json_number(t.start_norm2)
        << ", \"end_norm2\": " << json_number(t.end_norm2)
        << ", \"observed\": " << json_number(t.observed) << "}";
  }
  out << "\n  ]\n}\n";
  return out.str();
}

}  // namespace stokesheat
