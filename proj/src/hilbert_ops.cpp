#include "stokesheat/hilbert_ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "stokesheat/error.hpp"
#include "stokesheat/kernels.hpp"

namespace stokesheat {

StateVector StateVector::zeros(const EigenBasis& basis) {
  return {basis.id(), std::vector<double>(basis.size(), 0.0)};
}

StateVector StateVector::unit(const EigenBasis& basis, std::size_t j) {
  require(j < basis.size(), "StateVector::unit: index outside the basis");
  auto s = zeros(basis);
  s.a[j] = 1.0;
  return s;
}

double StateVector::norm() const {
  double acc = 0;
  for (double v : a) acc += v * v;
  return std::sqrt(acc);
}

ObservationRegion::ObservationRegion(double x1_lo, double x1_hi, double x2_lo,
                                     double x2_hi)
    : x1_lo_(x1_lo), x1_hi_(x1_hi), x2_lo_(x2_lo), x2_hi_(x2_hi) {
  const double two_pi = 2 * std::numbers::pi;
  require(x1_lo >= 0 && x1_hi <= two_pi && x1_lo < x1_hi,
          "region: need 0 <= x1_lo < x1_hi <= 2pi");
  require(x2_lo > 0 && x2_hi < 1 && x2_lo < x2_hi,
          "region: need 0 < x2_lo < x2_hi < 1");
}

ObservationRegion ObservationRegion::whole_domain() {
  ObservationRegion r;
  r.x1_lo_ = 0;
  r.x1_hi_ = 2 * std::numbers::pi;
  r.x2_lo_ = 0;
  r.x2_hi_ = 1;
  return r;
}

bool ObservationRegion::contains(double x1, double x2) const noexcept {
  return x1 >= x1_lo_ && x1 <= x1_hi_ && x2 >= x2_lo_ && x2 <= x2_hi_;
}

namespace {

void check_same(const StateVector& x, const StateVector& y) {
  require(x.basis_ref == y.basis_ref && x.a.size() == y.a.size(),
          "state vectors refer to different bases");
}

void check_on(const EigenBasis& basis, const StateVector& x) {
  require(x.a.size() == basis.size() && x.basis_ref == basis.id(),
          "state vector does not belong to this basis");
}

// A separable field component: scale * trig(k x1) * profile(x2).
struct Trig {
  int k = 0;
  bool sine = false;
  double sign = 0;  // 0 marks an identically zero component
};

enum class Component { u1, u2, d1u1, d2u1, d1u2, d2u2 };

// Generalized (C, S) of eval_jet: cosine phase (cos, sin), sine phase
// (sin, -cos).
Trig trig_C(const EigenMode& m) {
  return m.phase == Phase::sine ? Trig{m.k, true, 1} : Trig{m.k, false, 1};
}
Trig trig_S(const EigenMode& m) {
  return m.phase == Phase::sine ? Trig{m.k, false, -1} : Trig{m.k, true, 1};
}

Trig component_trig(const EigenMode& m, Component c) {
  if (m.k == 0) {
    const bool live = c == Component::u1 || c == Component::d2u1;
    return {0, false, live ? 1.0 : 0.0};
  }
  switch (c) {
    case Component::u1:
    case Component::d2u1:
    case Component::d1u2:
      return trig_S(m);
    case Component::u2:
    case Component::d1u1:
    case Component::d2u2:
      return trig_C(m);
  }
  return {};
}

double component_profile(const EigenMode& m, Component c, double x2) {
  if (m.k == 0) {
    const double w = m.n * std::numbers::pi;
    if (c == Component::u1) return m.amplitude * std::sin(w * x2);
    if (c == Component::d2u1) return m.amplitude * w * std::cos(w * x2);
    return 0.0;
  }
  const auto d = m.profile.derivatives(x2);
  const double nf = m.profile.norm_factor, k = m.k;
  switch (c) {
    case Component::u1: return -nf * d[1] / k;
    case Component::u2: return nf * d[0];
    case Component::d1u1: return -nf * d[1];
    case Component::d2u1: return -nf * d[2] / k;
    case Component::d1u2: return -k * nf * d[0];
    case Component::d2u2: return nf * d[1];
  }
  return 0.0;
}

/// int_a^b cos(m x) and sin(m x) for integer m, cached per |m|.
class TrigIntegrals {
 public:
  TrigIntegrals(Wide a, Wide b, int max_m) : a_(a), b_(b) {
    ic_.resize(max_m + 1);
    is_.resize(max_m + 1);
    for (int m = 0; m <= max_m; ++m) {
      if (m == 0) {
        ic_[0] = b - a;
        is_[0] = 0;
      } else {
        const Wide wm = m;
        ic_[m] = (num::sin(wm * b) - num::sin(wm * a)) / wm;
        is_[m] = (num::cos(wm * a) - num::cos(wm * b)) / wm;
      }
    }
  }
  Wide ic(int m) const { return ic_[std::abs(m)]; }
  Wide is(int m) const { return m < 0 ? -is_[-m] : is_[m]; }

  Wide product(const Trig& p, const Trig& q) const {
    if (p.sign == 0 || q.sign == 0) return 0;
    const int d = p.k - q.k, s = p.k + q.k;
    Wide v;
    if (!p.sine && !q.sine) v = (ic(d) + ic(s)) / 2;
    else if (p.sine && q.sine) v = (ic(d) - ic(s)) / 2;
    else if (p.sine) v = (is(s) + is(d)) / 2;
    else v = (is(s) - is(d)) / 2;
    return v * Wide(p.sign * q.sign);
  }

 private:
  Wide a_, b_;
  std::vector<Wide> ic_, is_;
};

double max_profile_rate(const EigenBasis& basis) {
  double rate = 1;
  for (const auto& m : basis.modes) {
    const double r = m.k == 0
                         ? m.n * std::numbers::pi
                         : std::sqrt(std::abs(m.lambda - double(m.k) * m.k)) + m.k;
    rate = std::max(rate, r);
  }
  return rate;
}

/// sum over components of X_c o S_c, with S_c = V_c V_c^T exactly Gram.
Matrix<Wide> separable_gram(const EigenBasis& basis, Wide x1_lo, Wide x1_hi,
                            double x2_lo, double x2_hi,
                            std::span<const Component> comps) {
  const std::size_t n = basis.size();
  int kmax = 0;
  for (const auto& m : basis.modes) kmax = std::max(kmax, m.k);
  const TrigIntegrals ti(x1_lo, x1_hi, 2 * kmax);
  const auto rule = gramian_rule(basis, x2_lo, x2_hi);
  const std::size_t q = rule.size();

  std::vector<Wide> sqrt_w(q);
  std::vector<double> nodes(q);
  for (std::size_t i = 0; i < q; ++i) {
    sqrt_w[i] = num::sqrt(rule.weights[i]);
    nodes[i] = static_cast<double>(rule.nodes[i]);
  }

  Matrix<Wide> total(n, n);
  for (Component c : comps) {
    std::vector<Trig> trig(n);
    Matrix<Wide> v(n, q);
#pragma omp parallel for schedule(dynamic, 4)
    for (std::size_t j = 0; j < n; ++j) {
      trig[j] = component_trig(basis.modes[j], c);
      if (trig[j].sign == 0) continue;
      for (std::size_t i = 0; i < q; ++i)
        v(j, i) = sqrt_w[i] * Wide(component_profile(basis.modes[j], c, nodes[i]));
    }
    const Matrix<Wide> s = kernels::gram_rows(v);
#pragma omp parallel for schedule(dynamic, 4)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t l = 0; l <= j; ++l) {
        const Wide x = ti.product(trig[j], trig[l]);
        if (x == 0) continue;
        const Wide add = x * s(j, l);
        total(j, l) += add;
        if (l != j) total(l, j) += add;
      }
  }
  return total;
}

}  // namespace

double inner(const StateVector& x, const StateVector& y) {
  check_same(x, y);
  double acc = 0;
  for (std::size_t j = 0; j < x.a.size(); ++j) acc += x.a[j] * y.a[j];
  return acc;
}

StateVector semigroup(const EigenBasis& basis, const StateVector& x, double t) {
  require(t >= 0, "semigroup: t must be >= 0");
  check_on(basis, x);
  StateVector out = x;
  for (std::size_t j = 0; j < out.a.size(); ++j)
    out.a[j] *= std::exp(-basis.modes[j].lambda * t);
  return out;
}

StateVector project(const EigenBasis& basis, const StateVector& x,
                    double lambda) {
  check_on(basis, x);
  StateVector out = x;
  for (std::size_t j = 0; j < out.a.size(); ++j)
    if (basis.modes[j].lambda > lambda) out.a[j] = 0.0;
  return out;
}

FieldValue eval_state(const EigenBasis& basis, const StateVector& x, double x1,
                      double x2) {
  check_on(basis, x);
  FieldValue f;
  for (std::size_t j = 0; j < basis.size(); ++j) {
    if (x.a[j] == 0.0) continue;
    const auto v = eval_mode(basis.modes[j], x1, x2);
    f.u1 += x.a[j] * v.u1;
    f.u2 += x.a[j] * v.u2;
    f.p += x.a[j] * v.p;
    f.eta += x.a[j] * v.eta;
  }
  return f;
}

QuadratureRule<Wide> gramian_rule(const EigenBasis& basis, double lo,
                                  double hi) {
  const int panels = panels_for_rate(hi - lo, 2 * max_profile_rate(basis));
  return composite_gauss<Wide>(lo, hi, panels, 64);
}

ModalGramian obs_gramian(const EigenBasis& basis,
                         const ObservationRegion& region) {
  const bool whole = region == ObservationRegion::whole_domain();
  const Wide x1_lo = region.x1_lo();
  const Wide x1_hi = whole ? 2 * num::pi_wide() : Wide(region.x1_hi());
  constexpr Component comps[] = {Component::u1, Component::u2};
  ModalGramian g{basis.id(), region, {}, {}};
  g.wide = separable_gram(basis, x1_lo, x1_hi, region.x2_lo(), region.x2_hi(),
                          comps);
  g.m = matrix_cast<double>(g.wide);
  return g;
}

Matrix<double> trace_gramian(const EigenBasis& basis) {
  const std::size_t n = basis.size();
  Matrix<double> out(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t l = 0; l < n; ++l) {
      const auto& a = basis.modes[j];
      const auto& b = basis.modes[l];
      if (a.k >= 1 && a.k == b.k && a.phase == b.phase)
        out(j, l) = std::numbers::pi * a.eta_trace * b.eta_trace;
    }
  return out;
}

Matrix<double> h_gram(const EigenBasis& basis) {
  Matrix<double> m = obs_gramian(basis, ObservationRegion::whole_domain()).m;
  const auto n = trace_gramian(basis);
  for (std::size_t j = 0; j < m.rows(); ++j)
    for (std::size_t l = 0; l < m.cols(); ++l) m(j, l) += n(j, l);
  return m;
}

Matrix<double> rayleigh_matrix(const EigenBasis& basis) {
  constexpr Component comps[] = {Component::d1u1, Component::d2u1,
                                 Component::d1u2, Component::d2u2};
  const auto grad = separable_gram(basis, 0, 2 * num::pi_wide(), 0.0, 1.0, comps);
  const auto n = trace_gramian(basis);
  Matrix<double> out(basis.size(), basis.size());
  for (std::size_t j = 0; j < out.rows(); ++j)
    for (std::size_t l = 0; l < out.cols(); ++l) {
      const double k2 = double(basis.modes[j].k) * basis.modes[j].k;
      out(j, l) = -static_cast<double>(grad(j, l)) - k2 * n(j, l);
    }
  return out;
}

std::vector<double> apply_B(const ModalGramian& gram,
                            std::span<const std::size_t> controlled,
                            std::span<const double> g) {
  require(controlled.size() == g.size(),
          "apply_B: one amplitude per controlled mode");
  const std::size_t n = gram.size();
  for (std::size_t j : controlled)
    require(j < n, "apply_B: controlled index outside the basis");
  std::vector<double> out(n, 0.0);
  for (std::size_t l = 0; l < n; ++l) {
    double acc = 0;
    for (std::size_t i = 0; i < controlled.size(); ++i)
      acc += gram.m(l, controlled[i]) * g[i];
    out[l] = acc;
  }
  return out;
}

}  // namespace stokesheat
