#include "stokesheat/spectral_core.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <tuple>

#include "stokesheat/error.hpp"
#include "stokesheat/quadrature.hpp"

namespace stokesheat {

namespace {

using Jet = std::array<double, 6>;

Jet exp_jet(double rate, double shift, double x) {
  // d^m/dx^m e^{rate (x - shift)}
  Jet j{};
  double v = std::exp(rate * (x - shift));
  for (int m = 0; m < 6; ++m) {
    j[m] = v;
    v *= rate;
  }
  return j;
}

Jet trig_jet(double b, double x, bool sine, bool divide_by_b) {
  // d^m cos(bx) = b^m cos(bx + m pi/2), and sin(bx) is cos shifted by -pi/2
  const double c = std::cos(b * x), s = std::sin(b * x);
  const std::array<double, 4> cycle{c, -s, -c, s};
  Jet j{};
  double scale = divide_by_b ? 1.0 / b : 1.0;
  for (int m = 0; m < 6; ++m) {
    j[m] = cycle[(m + (sine ? 3 : 0)) % 4] * scale;
    scale *= b;
  }
  return j;
}

Jet hyp_jet(double b, double x, bool odd, bool divide_by_b) {
  // cosh(bx) or sinh(bx), optionally divided by b
  const double ch = std::cosh(b * x), sh = std::sinh(b * x);
  Jet j{};
  double scale = divide_by_b ? 1.0 / b : 1.0;
  for (int m = 0; m < 6; ++m) {
    const bool use_sinh = ((m % 2) == 1) != odd;
    j[m] = (use_sinh ? sh : ch) * scale;
    scale *= b;
  }
  return j;
}

Jet poly_jet(int degree, double x) {
  Jet j{};
  if (degree == 0) {
    j[0] = 1;
  } else {
    j[0] = x;
    j[1] = 1;
  }
  return j;
}

/// The four boundary functionals applied to a fundamental system given by
/// its jets at x = 0 and x = 1.
Eigen::Matrix4d boundary_matrix(int k, double lambda,
                                const std::array<Jet, 4>& at0,
                                const std::array<Jet, 4>& at1) {
  const double k2 = double(k) * k;
  Eigen::Matrix4d m;
  for (int c = 0; c < 4; ++c) {
    m(0, c) = at0[c][0];
    m(1, c) = at0[c][1];
    m(2, c) = at1[c][1];
    m(3, c) = k2 * (k2 - lambda) * at1[c][0] - at1[c][3];
  }
  return m;
}

/// Fundamental system analytic in lambda: cos(bx) and sin(bx)/b are even in
/// b, so they continue to cosh and sinh(b'x)/b' below k^2.
std::array<Jet, 4> analytic_system(int k, double lambda, double x) {
  const double d = lambda - double(k) * k;
  std::array<Jet, 4> f;
  f[0] = exp_jet(-k, 0.0, x);
  f[1] = exp_jet(k, 1.0, x);
  if (d > 0) {
    const double b = std::sqrt(d);
    f[2] = trig_jet(b, x, false, false);
    f[3] = trig_jet(b, x, true, true);
  } else {
    const double b = std::sqrt(-d);
    f[2] = hyp_jet(b, x, false, false);
    f[3] = hyp_jet(b, x, true, true);
  }
  return f;
}

double determinant_lu(Eigen::Matrix4d m) {
  double det = 1.0;
  for (int c = 0; c < 4; ++c) {
    int piv = c;
    for (int r = c + 1; r < 4; ++r)
      if (std::abs(m(r, c)) > std::abs(m(piv, c))) piv = r;
    if (m(piv, c) == 0.0) return 0.0;
    if (piv != c) {
      m.row(piv).swap(m.row(c));
      det = -det;
    }
    det *= m(c, c);
    for (int r = c + 1; r < 4; ++r) {
      const double f = m(r, c) / m(c, c);
      m.row(r).tail(3 - c) -= f * m.row(c).tail(3 - c);
    }
  }
  return det;
}

double evanescent_rate(int k, double lambda) {
  return std::sqrt(double(k) * k - lambda);
}

}  // namespace

std::string to_string(Branch b) {
  switch (b) {
    case Branch::oscillatory: return "oscillatory";
    case Branch::evanescent: return "evanescent";
    case Branch::degenerate: return "degenerate";
  }
  return "?";
}

std::string to_string(Phase p) {
  switch (p) {
    case Phase::none: return "none";
    case Phase::cosine: return "cosine";
    case Phase::sine: return "sine";
  }
  return "?";
}

Branch branch_from_string(const std::string& s) {
  if (s == "oscillatory") return Branch::oscillatory;
  if (s == "evanescent") return Branch::evanescent;
  if (s == "degenerate") return Branch::degenerate;
  fail(ErrorKind::malformed_file, "unknown branch '" + s + "'");
}

Phase phase_from_string(const std::string& s) {
  if (s == "none") return Phase::none;
  if (s == "cosine") return Phase::cosine;
  if (s == "sine") return Phase::sine;
  fail(ErrorKind::malformed_file, "unknown phase '" + s + "'");
}

double degeneracy_width(int k, double rel_tol) {
  return rel_tol * std::max(1.0, double(k) * k);
}

Branch classify_branch(int k, double lambda, double rel_deg_tol) {
  const double d = lambda - double(k) * k;
  if (std::abs(d) <= degeneracy_width(k, rel_deg_tol)) return Branch::degenerate;
  return d > 0 ? Branch::oscillatory : Branch::evanescent;
}

std::array<std::array<double, 6>, 4> basis_derivatives(int k, double lambda,
                                                       Branch b, double x) {
  std::array<Jet, 4> f;
  f[0] = exp_jet(-k, 0.0, x);
  f[1] = exp_jet(k, 1.0, x);
  switch (b) {
    case Branch::oscillatory: {
      const double beta = std::sqrt(lambda - double(k) * k);
      f[2] = trig_jet(beta, x, false, false);
      f[3] = trig_jet(beta, x, true, false);
      break;
    }
    case Branch::evanescent: {
      const double beta = evanescent_rate(k, lambda);
      if (beta >= 1.0) {
        f[2] = exp_jet(-beta, 0.0, x);
        f[3] = exp_jet(beta, 1.0, x);
      } else {
        f[2] = hyp_jet(beta, x, false, false);
        f[3] = hyp_jet(beta, x, true, true);
      }
      break;
    }
    case Branch::degenerate:
      f[2] = poly_jet(0, x);
      f[3] = poly_jet(1, x);
      break;
  }
  return f;
}

std::array<double, 6> StreamProfile::derivatives(double x2) const {
  const auto f = basis_derivatives(k, lambda, branch, x2);
  std::array<double, 6> out{};
  for (int m = 0; m < 6; ++m)
    for (int i = 0; i < 4; ++i) out[m] += c[i] * f[i][m];
  return out;
}

EigenMode zero_mode(int n) {
  require(n >= 1, "zero_mode: n must be >= 1");
  EigenMode m;
  m.k = 0;
  m.n = n;
  m.phase = Phase::none;
  m.lambda = double(n) * n * std::numbers::pi * std::numbers::pi;
  m.amplitude = 1.0 / std::sqrt(std::numbers::pi);
  m.eta_trace = 0.0;
  return m;
}

double dispersion(int k, double lambda, double rel_deg_tol) {
  require(k >= 1, "dispersion: k must be >= 1");
  require(lambda > 0, "dispersion: lambda must be positive");
  if (std::abs(lambda - double(k) * k) <= degeneracy_width(k, rel_deg_tol))
    fail(ErrorKind::degenerate_branch,
         "dispersion: lambda within the degeneracy guard of k^2 (k=" +
             std::to_string(k) + ")");
  Eigen::Matrix4d m = boundary_matrix(k, lambda, analytic_system(k, lambda, 0.0),
                                      analytic_system(k, lambda, 1.0));
  for (int r = 0; r < 4; ++r) {
    const double s = m.row(r).cwiseAbs().maxCoeff();
    if (s > 0) m.row(r) /= s;
  }
  return determinant_lu(m);
}

std::vector<Bracket> bracket_roots(int k, double lambda_max, double density,
                                   double rel_deg_tol) {
  require(k >= 1, "bracket_roots: k must be >= 1");
  require(lambda_max > 0, "bracket_roots: Lambda must be positive");
  require(density >= 4, "bracket_roots: density must be >= 4");

  const double k2 = double(k) * k;
  const double delta = degeneracy_width(k, rel_deg_tol);
  const double guard_lo = k2 - delta, guard_hi = k2 + delta;

  // Sample points in lambda; the guard interval splits the scan into two
  // independent runs.
  std::vector<double> below, above;
  auto push = [&](double lam) {
    if (lam <= 0 || lam > lambda_max) return;
    if (lam < guard_lo) below.push_back(lam);
    else if (lam > guard_hi) above.push_back(lam);
  };
  const double smax = std::sqrt(lambda_max);
  for (long i = 1;; ++i) {
    const double s = double(i) / density;
    if (s >= smax) break;
    push(s * s);
  }
  push(lambda_max);
  if (guard_lo > 0) push(std::nextafter(guard_lo, 0.0));
  push(std::nextafter(guard_hi, guard_hi * 2));

  std::vector<Bracket> out;
  for (auto* run : {&below, &above}) {
    std::sort(run->begin(), run->end());
    run->erase(std::unique(run->begin(), run->end()), run->end());
    double prev_lam = 0, prev_val = 0;
    bool have_prev = false;
    for (double lam : *run) {
      const double v = dispersion(k, lam, rel_deg_tol);
      if (have_prev) {
        if (v == 0.0)
          out.push_back({lam, lam});
        else if (prev_val != 0.0 && (prev_val < 0) != (v < 0))
          out.push_back({prev_lam, lam});
      }
      prev_lam = lam;
      prev_val = v;
      have_prev = true;
    }
  }
  std::sort(out.begin(), out.end(),
            [](const Bracket& a, const Bracket& b) { return a.lo < b.lo; });
  return out;
}

RefinedRoot refine_root(int k, Bracket bracket, double tol,
                        double rel_deg_tol) {
  require(bracket.lo <= bracket.hi, "refine_root: lo > hi");
  require(tol > 0, "refine_root: tol must be positive");
  auto f = [&](double lam) { return dispersion(k, lam, rel_deg_tol); };
  RefinedRoot r;
  const double flo = f(bracket.lo);
  const double fhi = bracket.hi == bracket.lo ? flo : f(bracket.hi);
  r.evaluations = bracket.hi == bracket.lo ? 1 : 2;
  if (flo == 0.0 || fhi == 0.0) {
    r.lambda = flo == 0.0 ? bracket.lo : bracket.hi;
    r.enclosure = {r.lambda, r.lambda};
    return r;
  }
  if ((flo < 0) == (fhi < 0))
    fail(ErrorKind::invalid_bracket,
         "refine_root: dispersion has the same sign at both ends");

  auto done = [&](double a, double b) {
    return b - a <= tol * std::max(std::abs(a), std::abs(b));
  };
  Bracket enc = bracket;
  if (!done(enc.lo, enc.hi)) {
    boost::uintmax_t iters = 200;
    const auto res = boost::math::tools::toms748_solve(f, enc.lo, enc.hi, flo,
                                                       fhi, done, iters);
    enc = {res.first, res.second};
    r.evaluations += static_cast<int>(iters);
    // toms748 stops on its own iteration budget only in pathological cases;
    // finish by bisection so the width contract always holds.
    double a = enc.lo, b = enc.hi;
    double fa = f(a);
    ++r.evaluations;
    while (!done(a, b)) {
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) break;
      const double fm = f(mid);
      ++r.evaluations;
      if (fm == 0.0) {
        a = b = mid;
        break;
      }
      if ((fm < 0) == (fa < 0)) {
        a = mid;
        fa = fm;
      } else {
        b = mid;
      }
    }
    enc = {a, b};
  }
  r.enclosure = enc;
  r.lambda = 0.5 * (enc.lo + enc.hi);
  return r;
}

EigenMode build_mode(int k, double lambda, Phase phase, int n,
                     const SpectralTolerances& tol) {
  require(k >= 1, "build_mode: k must be >= 1 (use zero_mode for k = 0)");
  require(lambda > 0, "build_mode: lambda must be positive");
  require(phase == Phase::cosine || phase == Phase::sine,
          "build_mode: phase must be cosine or sine");

  const Branch branch = classify_branch(k, lambda, tol.degeneracy);
  std::array<Jet, 4> at0 = basis_derivatives(k, lambda, branch, 0.0);
  std::array<Jet, 4> at1 = basis_derivatives(k, lambda, branch, 1.0);
  Eigen::Matrix4d m = boundary_matrix(k, lambda, at0, at1);

  // Two-sided equilibration before the SVD.
  Eigen::Vector4d col_scale;
  for (int r = 0; r < 4; ++r) {
    const double s = m.row(r).cwiseAbs().maxCoeff();
    if (s > 0) m.row(r) /= s;
  }
  for (int c = 0; c < 4; ++c) {
    const double s = m.col(c).cwiseAbs().maxCoeff();
    col_scale(c) = s > 0 ? 1.0 / s : 1.0;
    m.col(c) *= col_scale(c);
  }
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(3) <= tol.residual_gate * sv(0)))
    fail(ErrorKind::not_an_eigenvalue,
         "build_mode: boundary matrix is not singular at lambda (k=" +
             std::to_string(k) + ", sigma_min/sigma_max=" +
             std::to_string(sv(3) / sv(0)) + ")");
  if (sv(2) < tol.multiplicity_gate * sv(0))
    fail(ErrorKind::multiplicity,
         "build_mode: two-dimensional nullspace in sector k=" +
             std::to_string(k));

  Eigen::Vector4d c = svd.matrixV().col(3).cwiseProduct(col_scale);
  c /= c.cwiseAbs().maxCoeff();

  StreamProfile prof;
  prof.k = k;
  prof.lambda = lambda;
  prof.branch = branch;
  for (int i = 0; i < 4; ++i) prof.c[i] = c(i);

  // phi(0) = phi'(0) = 0, so the first nonzero of phi''(0), phi'''(0) fixes
  // the sign.
  const auto d0 = prof.derivatives(0.0);
  const double lead = std::abs(d0[2]) > 1e-8 * std::abs(d0[3]) ? d0[2] : d0[3];
  if (lead < 0)
    for (auto& ci : prof.c) ci = -ci;

  // Unit norm: pi * [ int_0^1 (phi'^2 / k^2 + phi^2) + phi(1)^2 ].
  const double beta =
      std::sqrt(std::abs(lambda - double(k) * k));
  const int panels = panels_for_rate(1.0, 2.0 * (beta + k));
  const auto rule = composite_gauss<double>(0.0, 1.0, panels, tol.quad_nodes);
  const double k2 = double(k) * k;
  double integral = 0;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const auto d = prof.derivatives(rule.nodes[q]);
    integral += rule.weights[q] * (d[1] * d[1] / k2 + d[0] * d[0]);
  }
  const double phi1 = prof.value(1.0);
  const double norm2 = std::numbers::pi * (integral + phi1 * phi1);
  prof.norm_factor = 1.0 / std::sqrt(norm2);

  EigenMode mode;
  mode.k = k;
  mode.n = n;
  mode.phase = phase;
  mode.lambda = lambda;
  mode.profile = prof;
  mode.eta_trace = phi1 * prof.norm_factor;
  return mode;
}

namespace {

void check_domain(double x1, double x2) {
  if (!(x1 >= 0.0 && x1 < 2.0 * std::numbers::pi))
    fail(ErrorKind::invalid_argument, "eval_mode: x1 outside [0, 2pi)");
  if (!(x2 >= 0.0 && x2 <= 1.0))
    fail(ErrorKind::invalid_argument, "eval_mode: x2 outside [0, 1]");
}

// (C, S) with dC/dx1 = -k S and dS/dx1 = k C; the cosine phase uses
// (cos, sin), the sine phase (sin, -cos).
std::pair<double, double> phase_pair(const EigenMode& m, double x1) {
  const double c = std::cos(m.k * x1), s = std::sin(m.k * x1);
  return m.phase == Phase::sine ? std::pair{s, -c} : std::pair{c, s};
}

}  // namespace

FieldJet eval_jet(const EigenMode& mode, double x1, double x2) {
  check_domain(x1, x2);
  FieldJet j;
  if (mode.k == 0) {
    const double w = mode.n * std::numbers::pi;
    const double a = mode.amplitude;
    j.u1 = a * std::sin(w * x2);
    j.u1_x2 = a * w * std::cos(w * x2);
    j.lap_u1 = -w * w * j.u1;
    return j;
  }
  const auto& pr = mode.profile;
  const auto d = pr.derivatives(x2);
  const double nf = pr.norm_factor;
  const double k = mode.k, k2 = k * k, shift = mode.lambda - k2;
  const double phi = nf * d[0], phi1 = nf * d[1], phi2 = nf * d[2],
               phi3 = nf * d[3], phi4 = nf * d[4], phi5 = nf * d[5];
  const double ph = (phi3 + shift * phi1) / k2;
  const double ph1 = (phi4 + shift * phi2) / k2;
  const double ph2 = (phi5 + shift * phi3) / k2;
  const auto [C, S] = phase_pair(mode, x1);

  j.u1 = -(phi1 / k) * S;
  j.u1_x1 = -phi1 * C;
  j.u1_x2 = -(phi2 / k) * S;
  j.lap_u1 = -((phi3 - k2 * phi1) / k) * S;
  j.u2 = phi * C;
  j.u2_x1 = -k * phi * S;
  j.u2_x2 = phi1 * C;
  j.lap_u2 = (phi2 - k2 * phi) * C;
  j.u2_x1x1 = -k2 * phi * C;
  j.p = ph * C;
  j.p_x1 = -k * ph * S;
  j.p_x2 = ph1 * C;
  j.lap_p = (ph2 - k2 * ph) * C;
  return j;
}

FieldValue eval_mode(const EigenMode& mode, double x1, double x2) {
  check_domain(x1, x2);
  FieldValue v;
  if (mode.k == 0) {
    v.u1 = mode.amplitude * std::sin(mode.n * std::numbers::pi * x2);
    return v;
  }
  const auto& pr = mode.profile;
  const auto d = pr.derivatives(x2);
  const double nf = pr.norm_factor;
  const double k = mode.k, k2 = k * k;
  const auto [C, S] = phase_pair(mode, x1);
  v.u1 = -(nf * d[1] / k) * S;
  v.u2 = nf * d[0] * C;
  v.p = nf * (d[3] + (mode.lambda - k2) * d[1]) / k2 * C;
  v.eta = mode.eta_trace * C;
  return v;
}

std::vector<double> sector_eigenvalues(int k, double lambda_max,
                                       const SpectralTolerances& tol) {
  std::vector<double> out;
  for (const auto& b :
       bracket_roots(k, lambda_max, tol.scan_density, tol.degeneracy)) {
    const double lam = refine_root(k, b, tol.root_tol, tol.degeneracy).lambda;
    if (lam <= lambda_max) out.push_back(lam);
  }
  return out;
}

int default_k_max(double lambda_max) {
  return static_cast<int>(std::floor(std::sqrt(lambda_max))) + 1;
}

std::vector<double> EigenBasis::eigenvalues() const {
  std::vector<double> v;
  v.reserve(modes.size());
  for (const auto& m : modes) v.push_back(m.lambda);
  return v;
}

std::vector<std::size_t> EigenBasis::indices_up_to(double lam) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < modes.size(); ++i)
    if (modes[i].lambda <= lam) idx.push_back(i);
  return idx;
}

std::string EigenBasis::id() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  auto mixd = [&](double d) { mix(std::bit_cast<std::uint64_t>(d)); };
  mixd(cutoff);
  mix(static_cast<std::uint64_t>(k_range));
  for (const auto& m : modes) {
    mix(static_cast<std::uint64_t>(m.k));
    mix(static_cast<std::uint64_t>(m.n));
    mix(static_cast<std::uint64_t>(m.phase));
    mixd(m.lambda);
    mixd(m.amplitude);
    mixd(m.eta_trace);
    mix(static_cast<std::uint64_t>(m.profile.branch));
    for (double c : m.profile.c) mixd(c);
    mixd(m.profile.norm_factor);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

EigenBasis assemble_basis(double lambda_max, int k_max,
                          const AssembleOptions& opts) {
  require(lambda_max > 0, "assemble_basis: Lambda_max must be positive");
  require(k_max >= 1, "assemble_basis: k_max must be >= 1");
  const auto& tol = opts.tol;

  // Sector k_max must be empty below the cutoff. Sectors beyond it are
  // checked too, up to the first k with k^2 >= Lambda_max, past which the
  // bound lambda > k^2 rules out any root.
  const int k_check_end = std::max(
      k_max, static_cast<int>(std::ceil(std::sqrt(lambda_max))));
  const int sectors = k_check_end;  // k = 1 .. k_check_end
  std::vector<std::vector<double>> roots(sectors + 1);
#pragma omp parallel for schedule(dynamic, 1)
  for (int k = 1; k <= sectors; ++k)
    roots[k] = sector_eigenvalues(k, lambda_max, tol);

  for (int k = k_max; k <= sectors; ++k)
    if (!roots[k].empty())
      fail(ErrorKind::incomplete_basis,
           "assemble_basis: sector k=" + std::to_string(k) +
               " has an eigenvalue " + std::to_string(roots[k].front()) +
               " <= Lambda_max; raise k_max above " + std::to_string(k_max));

  std::vector<std::vector<EigenMode>> per_sector(k_max);
#pragma omp parallel for schedule(dynamic, 1)
  for (int k = 1; k < k_max; ++k) {
    auto& out = per_sector[k];
    for (std::size_t i = 0; i < roots[k].size(); ++i) {
      for (Phase ph : {Phase::cosine, Phase::sine})
        out.push_back(build_mode(k, roots[k][i], ph, static_cast<int>(i) + 1,
                                 tol));
    }
  }

  EigenBasis basis;
  basis.cutoff = lambda_max;
  basis.k_range = k_max;
  const double pi2 = std::numbers::pi * std::numbers::pi;
  for (int n = 1; double(n) * n * pi2 <= lambda_max; ++n)
    basis.modes.push_back(zero_mode(n));
  for (auto& v : per_sector)
    for (auto& m : v) basis.modes.push_back(std::move(m));
  std::sort(basis.modes.begin(), basis.modes.end(),
            [](const EigenMode& a, const EigenMode& b) {
              return std::tie(a.lambda, a.k, a.phase, a.n) <
                     std::tie(b.lambda, b.k, b.phase, b.n);
            });

  basis.metadata.lambda_max = lambda_max;
  basis.metadata.k_max = k_max;
  basis.metadata.tolerances = tol;
  basis.metadata.quad_panels =
      panels_for_rate(1.0, 2.0 * (std::sqrt(lambda_max) + k_max));
  basis.metadata.build_timestamp = opts.build_timestamp;
  return basis;
}

}  // namespace stokesheat
