#include "stokesheat/spectral_inequality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "stokesheat/error.hpp"
#include "stokesheat/kernels.hpp"

namespace stokesheat {

// ---- kernel --------------------------------------------------------------------

Kernel::Kernel(double S0, double a, double b) : S0_(S0), a_(a), b_(b) {
  require(S0 > 0 && std::isfinite(S0), "kernel: S0 must be positive");
  require(0 < a && a < b && b < S0, "kernel: need 0 < a < b < S0");
}

Kernel Kernel::canonical(double S0) { return Kernel(S0, S0 / 4, 3 * S0 / 4); }

double Kernel::value(double s) const {
  if (!(s > a_ && s < b_)) return 0.0;
  const double w = b_ - a_;
  return std::exp(4 / (w * w) - 1 / ((s - a_) * (b_ - s)));
}

Wide Kernel::log_value(Wide s) const {
  const Wide a = a_, b = b_;
  if (!(s > a && s < b)) return -std::numeric_limits<double>::infinity();
  const Wide w = b - a;
  return 4 / (w * w) - 1 / ((s - a) * (b - s));
}

namespace {

struct KernelMoments {
  Wide plain = 0, heavy = 0;
};

KernelMoments moments(const Kernel& kernel, const QuadratureRule<Wide>& rule,
                      Wide root_lambda) {
  KernelMoments m;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const Wide lk = 2 * kernel.log_value(rule.nodes[q]);
    if (!(lk > -1e4)) continue;
    m.plain += rule.weights[q] * num::exp(lk);
    m.heavy += rule.weights[q] *
               num::exp(lk + 2 * num::log_cosh(rule.nodes[q] * root_lambda));
  }
  return m;
}

bool settled(Wide now, Wide before, double tol) {
  return num::abs(now - before) <= Wide(tol) * num::abs(now);
}

}  // namespace

QuadratureRule<Wide> kernel_rule(const Kernel& kernel, double max_lambda,
                                 double rel_tol) {
  require(max_lambda >= 0, "kernel_rule: max_lambda must be >= 0");
  const Wide root = num::sqrt(Wide(max_lambda));
  auto rule = composite_gauss<Wide>(kernel.a(), kernel.b(), 1, 64);
  auto prev = moments(kernel, rule, root);
  for (int panels = 2; panels <= 4096; panels *= 2) {
    auto next_rule = composite_gauss<Wide>(kernel.a(), kernel.b(), panels, 64);
    const auto next = moments(kernel, next_rule, root);
    const bool done =
        settled(next.plain, prev.plain, rel_tol) && settled(next.heavy, prev.heavy, rel_tol);
    rule = std::move(next_rule);
    prev = next;
    if (done) return rule;
  }
  fail(ErrorKind::configuration, "kernel_rule: s quadrature did not settle");
}

double kernel_l2_squared(const Kernel& kernel, double rel_tol) {
  const auto rule = kernel_rule(kernel, 0.0, rel_tol);
  return static_cast<double>(moments(kernel, rule, 0).plain);
}

// ---- weighted Gramian ------------------------------------------------------------

namespace {

/// S_jl = int kappa^2 cosh(s r_j) cosh(s r_l) ds as V V^T, V built in log
/// space so that large cosh factors never overflow.
Matrix<Wide> cosh_moments(const std::vector<double>& lambdas,
                          const Kernel& kernel,
                          const QuadratureRule<Wide>& rule) {
  const std::size_t n = lambdas.size(), q = rule.size();
  std::vector<Wide> base(q);
  for (std::size_t i = 0; i < q; ++i)
    base[i] = num::log(rule.weights[i]) / 2 + kernel.log_value(rule.nodes[i]);
  Matrix<Wide> v(n, q);
#pragma omp parallel for schedule(static)
  for (std::size_t j = 0; j < n; ++j) {
    const Wide r = num::sqrt(Wide(lambdas[j]));
    for (std::size_t i = 0; i < q; ++i) {
      const Wide e = base[i] + num::log_cosh(rule.nodes[i] * r);
      v(j, i) = e > -1e4 ? num::exp(e) : Wide(0);
    }
  }
  return kernels::gram_rows(v);
}

}  // namespace

WeightedGramian weighted_gramian(const EigenBasis& basis,
                                 const ModalGramian& gram, double lambda,
                                 const Kernel& kernel) {
  require(gram.basis_ref == basis.id() && gram.size() == basis.size(),
          "weighted_gramian: Gramian belongs to another basis");
  if (lambda > basis.cutoff)
    fail(ErrorKind::incomplete_basis,
         "weighted_gramian: Lambda exceeds the basis cutoff");
  WeightedGramian out;
  out.indices = basis.indices_up_to(lambda);
  std::vector<double> lams;
  for (std::size_t j : out.indices) lams.push_back(basis.modes[j].lambda);
  const double top = lams.empty() ? 0.0 : *std::max_element(lams.begin(), lams.end());
  const auto s = cosh_moments(lams, kernel, kernel_rule(kernel, top));
  out.k = principal(gram.wide, std::span<const std::size_t>(out.indices));
  for (std::size_t i = 0; i < out.k.rows(); ++i)
    for (std::size_t j = 0; j < out.k.cols(); ++j) out.k(i, j) *= s(i, j);
  return out;
}

WeightedGramian weighted_gramian(const EigenBasis& basis, double lambda,
                                 const ObservationRegion& region,
                                 const Kernel& kernel) {
  return weighted_gramian(basis, obs_gramian(basis, region), lambda, kernel);
}

// ---- report -----------------------------------------------------------------------

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "fit_line: x and y differ in length");
  require(x.size() >= 2, "fit_line: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0))
    fail(ErrorKind::invalid_argument, "fit_line: all abscissae coincide");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  f.points = x.size();
  return f;
}

double implied_constant(double lambda, Wide value) {
  if (!(value > 0)) return std::numeric_limits<double>::infinity();
  // g(C) = -log C - C sqrt(Lambda) - log(value) is strictly decreasing.
  const double root = std::sqrt(lambda);
  const double lv = static_cast<double>(num::log(value));
  auto g = [&](double logc) { return -logc - std::exp(logc) * root - lv; };
  double lo = -60, hi = 60;
  while (g(lo) < 0) lo *= 2;
  while (g(hi) > 0) hi *= 2;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = (lo + hi) / 2;
    (g(mid) > 0 ? lo : hi) = mid;
  }
  return std::exp((lo + hi) / 2);
}

namespace {

Wide min_eigenvalue(const Matrix<Wide>& a) {
  return kernels::min_eigenvalue_psd(a);
}

}  // namespace

SpecIneqReport spec_ineq_report(const EigenBasis& basis,
                                const std::vector<double>& lambdas,
                                const ObservationRegion& region,
                                const Kernel& kernel) {
  require(!lambdas.empty(), "spec_ineq_report: no cutoffs given");
  const double top = *std::max_element(lambdas.begin(), lambdas.end());
  const auto gram = obs_gramian(basis, region);
  // Every smaller K is a principal submatrix of the largest one.
  const auto big = weighted_gramian(basis, gram, top, kernel);

  SpecIneqReport rep;
  rep.kernel_l2 = kernel_l2_squared(kernel);
  std::vector<double> xs, ys;
  for (double lam : lambdas) {
    SpecIneqRow row;
    row.lambda = lam;
    std::vector<std::size_t> local;
    for (std::size_t i = 0; i < big.indices.size(); ++i)
      if (basis.modes[big.indices[i]].lambda <= lam) local.push_back(i);
    row.dim = local.size();
    if (row.dim > 0) {
      const auto k = principal(big.k, std::span<const std::size_t>(local));
      for (std::size_t i = 0; i < k.rows(); ++i) row.trace += k(i, i);
      row.min_eig = min_eigenvalue(k);
      std::vector<std::size_t> global;
      for (std::size_t i : local) global.push_back(big.indices[i]);
      row.min_eig_m =
          min_eigenvalue(principal(gram.wide, std::span<const std::size_t>(global)));
      row.violation = row.min_eig <= Wide(-1e-10) * row.trace;
      row.implied_constant = implied_constant(lam, row.min_eig);
      if (row.min_eig > 0) {
        xs.push_back(std::sqrt(lam));
        ys.push_back(-static_cast<double>(num::log(row.min_eig)));
      }
    }
    rep.any_violation = rep.any_violation || row.violation;
    rep.rows.push_back(row);
  }
  std::size_t nonempty = 0;
  for (const auto& r : rep.rows) nonempty += r.dim > 0;
  require(nonempty >= 3, "spec_ineq_report: need at least three nonempty cutoffs");
  if (xs.size() >= 2) rep.fit = fit_line(xs, ys);
  return rep;
}

// ---- augmented field --------------------------------------------------------------

namespace {

/// int_lo^hi C(x1) dx1 for the mode's generalized cosine C.
double x1_mean_factor(const EigenMode& m, double lo, double hi) {
  const double k = m.k;
  if (m.phase == Phase::sine) return (std::cos(k * lo) - std::cos(k * hi)) / k;
  return (std::sin(k * hi) - std::sin(k * lo)) / k;
}

/// Mean of the mode pressure over the region. p = nf p-hat(x2) C(x1) and
/// (phi'' + (lambda - k^2) phi) / k^2 is an antiderivative of p-hat.
double pressure_mean(const EigenMode& m, const ObservationRegion& r) {
  if (m.k == 0) return 0.0;
  const double k2 = double(m.k) * m.k;
  auto anti = [&](double x2) {
    const auto d = m.profile.derivatives(x2);
    return (d[2] + (m.lambda - k2) * d[0]) / k2;
  };
  const double x2_int =
      m.profile.norm_factor * (anti(r.x2_hi()) - anti(r.x2_lo()));
  return x1_mean_factor(m, r.x1_lo(), r.x1_hi()) * x2_int / r.area();
}

}  // namespace

AugmentedField::AugmentedField(const EigenBasis& basis, std::vector<double> a,
                               double lambda,
                               const ObservationRegion& gauge_region,
                               std::vector<double> s_grid)
    : basis_(&basis), s_grid_(std::move(s_grid)) {
  require(a.size() == basis.size(),
          "augmented_field: one coefficient per basis mode");
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (a[j] == 0.0) continue;
    const auto& m = basis.modes[j];
    if (m.lambda > lambda)
      fail(ErrorKind::invalid_argument,
           "augmented_field: nonzero coefficient above the cutoff");
    support_.push_back(j);
    a_.push_back(a[j]);
    sqrt_lambda_.push_back(std::sqrt(m.lambda));
    pmean_.push_back(pressure_mean(m, gauge_region));
    max_k_ = std::max(max_k_, m.k);
  }
}

double AugmentedField::gauge(double s) const {
  double c = gauge_offset_;
  for (std::size_t i = 0; i < support_.size(); ++i)
    c -= a_[i] * std::cosh(sqrt_lambda_[i] * s) * pmean_[i];
  return c;
}

std::vector<double> AugmentedField::gauge_samples() const {
  std::vector<double> out;
  out.reserve(s_grid_.size());
  for (double s : s_grid_) out.push_back(gauge(s));
  return out;
}

AugmentedJet AugmentedField::eval(double s, double x1, double x2) const {
  AugmentedJet f;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    const auto& m = basis_->modes[support_[i]];
    const FieldJet j = eval_jet(m, x1, x2);
    const double r = sqrt_lambda_[i];
    const double w = a_[i] * std::cosh(r * s);
    const double ws = a_[i] * r * std::sinh(r * s);
    const double wss = a_[i] * m.lambda * std::cosh(r * s);
    const double k2 = double(m.k) * m.k;
    f.U1 += w * j.u1;
    f.U2 += w * j.u2;
    f.P += w * j.p;
    f.dsU1 += ws * j.u1;
    f.dsU2 += ws * j.u2;
    f.dssU1 += wss * j.u1;
    f.dssU2 += wss * j.u2;
    f.U1_x1 += w * j.u1_x1;
    f.U2_x2 += w * j.u2_x2;
    f.lapU1 += w * j.lap_u1;
    f.lapU2 += w * j.lap_u2;
    f.U2_x1x1 += w * j.u2_x1x1;
    f.P_x1 += w * j.p_x1;
    f.P_x2 += w * j.p_x2;
    f.P_x1x1 -= w * k2 * j.p;
    f.lapP += w * j.lap_p;
  }
  f.gauge = gauge(s);
  f.P += f.gauge;
  return f;
}

AugmentedField augmented_field(const EigenBasis& basis,
                               const std::vector<double>& a, double lambda,
                               const ObservationRegion& gauge_region,
                               std::vector<double> s_grid) {
  return AugmentedField(basis, a, lambda, gauge_region, std::move(s_grid));
}

SampleGrid SampleGrid::uniform(double S0, int n) {
  require(n >= 2, "SampleGrid: need n >= 2");
  SampleGrid g;
  for (int i = 0; i < n; ++i) {
    g.s.push_back(S0 * (i + 0.5) / n);
    g.x1.push_back(2 * std::numbers::pi * (i + 0.5) / n);
    g.x2.push_back(double(i) / (n - 1));
  }
  return g;
}

double AugmentedResiduals::max() const {
  return std::max({momentum1, momentum2, divergence, dirichlet, ventcel,
                   pressure_laplace});
}

namespace {

/// Running sup of a residual and of the terms it balances.
struct SupRatio {
  double res = 0, scale = 0;
  void add(double r, std::initializer_list<double> terms) {
    res = std::max(res, std::abs(r));
    for (double t : terms) scale = std::max(scale, std::abs(t));
  }
  double value() const { return scale > 0 ? res / scale : res; }
};

}  // namespace

AugmentedResiduals residual_augmented(const AugmentedField& field,
                                      const SampleGrid& grid) {
  SupRatio m1, m2, div, dir, ven, lapp;
  // x1 mean of P on the top wall by an equispaced rule, exact for the
  // trigonometric degrees present.
  const int nmean = 2 * field.max_k() + 2;
  const double two_pi = 2 * std::numbers::pi;
  for (double s : grid.s) {
    double top_mean = 0;
    for (int i = 0; i < nmean; ++i)
      top_mean += field.eval(s, two_pi * i / nmean, 1.0).P;
    top_mean /= nmean;
    for (double x1 : grid.x1)
      for (double x2 : grid.x2) {
        const auto f = field.eval(s, x1, x2);
        m1.add(-f.dssU1 - f.lapU1 + f.P_x1, {f.dssU1, f.lapU1, f.P_x1});
        m2.add(-f.dssU2 - f.lapU2 + f.P_x2, {f.dssU2, f.lapU2, f.P_x2});
        div.add(f.U1_x1 + f.U2_x2, {f.U1_x1, f.U2_x2});
        lapp.add(f.lapP, {f.P_x1x1, f.lapP - f.P_x1x1});
        dir.add(0.0, {f.U1, f.U2});
        if (x2 == 0.0) dir.add(std::max(std::abs(f.U1), std::abs(f.U2)), {});
        if (x2 == 1.0)
          ven.add(-f.dssU2 - f.U2_x1x1 - (f.P - top_mean),
                  {f.dssU2, f.U2_x1x1, f.P, top_mean});
      }
  }
  return {m1.value(), m2.value(), div.value(),
          dir.value(), ven.value(), lapp.value()};
}

}  // namespace stokesheat
