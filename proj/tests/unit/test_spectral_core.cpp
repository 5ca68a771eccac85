#include <gtest/gtest.h>
#include <omp.h>

#include <cmath>
#include <numbers>

#include "oracle_values.hpp"
#include "stokesheat/error.hpp"
#include "stokesheat/spectral_core.hpp"

using namespace stokesheat;
using std::numbers::pi;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected stokesheat::Error";
  return ErrorKind::configuration;
}

double first_root(int k) {
  return sector_eigenvalues(k, 100.0).front();
}

}  // namespace

TEST(ZeroMode, EigenvalueAndAmplitude) {
  const auto m1 = zero_mode(1);
  EXPECT_DOUBLE_EQ(m1.lambda, pi * pi);
  EXPECT_DOUBLE_EQ(m1.amplitude, 1.0 / std::sqrt(pi));
  EXPECT_DOUBLE_EQ(zero_mode(3).lambda, 9 * pi * pi);
  for (int n = 1; n <= 20; ++n)
    EXPECT_LE(std::abs(zero_mode(n).lambda - n * n * pi * pi), 1e-10);
}

TEST(ZeroMode, RejectsNonPositiveIndex) {
  EXPECT_EQ(kind_of([] { zero_mode(0); }), ErrorKind::invalid_argument);
  EXPECT_EQ(kind_of([] { zero_mode(-2); }), ErrorKind::invalid_argument);
}

TEST(ZeroMode, EquationsHoldPointwise) {
  const auto m = zero_mode(1);
  for (int i = 0; i < 20; ++i) {
    const double x1 = 2 * pi * i / 20.0, x2 = i / 19.0;
    const auto j = eval_jet(m, x1, x2);
    EXPECT_LE(std::abs(-j.lap_u1 + j.p_x1 - m.lambda * j.u1), 1e-12);
    EXPECT_LE(std::abs(-j.lap_u2 + j.p_x2 - m.lambda * j.u2), 1e-12);
    EXPECT_LE(std::abs(j.u1_x1 + j.u2_x2), 1e-12);
  }
  EXPECT_LE(std::abs(eval_mode(m, 1.0, 0.0).u1), 1e-12);
  EXPECT_LE(std::abs(eval_mode(m, 1.0, 1.0).u1), 1e-12);
  const auto v = eval_mode(m, 0.5, 0.3);
  EXPECT_NEAR(v.u1, std::sin(pi * 0.3) / std::sqrt(pi), 1e-15);
  EXPECT_EQ(v.u2, 0.0);
  EXPECT_EQ(v.p, 0.0);
  EXPECT_EQ(v.eta, 0.0);
}

TEST(Dispersion, SignChangesBracketOracleRoots) {
  const auto br = bracket_roots(1, 400.0, 16.0);
  const auto& ref = oracle_values::sector[0];
  std::size_t below = 0;
  for (double v : ref) below += v <= 400.0;
  ASSERT_EQ(br.size(), below);
  for (std::size_t i = 0; i < br.size(); ++i) {
    EXPECT_LT(br[i].lo, ref[i]);
    EXPECT_GT(br[i].hi, ref[i]);
  }
}

TEST(Dispersion, SmallAtOracleRoot) {
  // Local scale: lambda * |dD/dlambda|, so the ratio is the relative
  // distance to the nearest root.
  for (double lam : oracle_values::sector[1]) {
    const double h = 1e-4 * lam;
    const double slope =
        std::abs(dispersion(2, lam + h) - dispersion(2, lam - h)) / (2 * h);
    EXPECT_LE(std::abs(dispersion(2, lam)), 1e-6 * lam * slope) << lam;
  }
}

TEST(Dispersion, GuardsDegeneratePoint) {
  EXPECT_EQ(kind_of([] { dispersion(3, 9.0); }), ErrorKind::degenerate_branch);
  EXPECT_EQ(kind_of([] { dispersion(3, 9.0 + 5e-8); }),
            ErrorKind::degenerate_branch);
  EXPECT_NO_THROW(dispersion(3, 9.0 + 1e-6));
  EXPECT_NO_THROW(dispersion(3, 9.0 - 1e-6));
  EXPECT_EQ(kind_of([] { dispersion(0, 5.0); }), ErrorKind::invalid_argument);
}

TEST(Dispersion, ContinuousAcrossKSquared) {
  // The fundamental system is analytic in lambda, so the two sides of the
  // guard meet.
  const double a = dispersion(2, 4.0 - 1e-6), b = dispersion(2, 4.0 + 1e-6);
  EXPECT_NEAR(a, b, 1e-4 * std::abs(a));
}

TEST(BracketRoots, EmptyNearZero) {
  EXPECT_TRUE(bracket_roots(1, 1e-6).empty());
  EXPECT_TRUE(bracket_roots(1, 0.5).empty());
}

TEST(BracketRoots, DensityDoublingIsStable) {
  for (int k = 1; k <= 4; ++k)
    EXPECT_EQ(bracket_roots(k, 400.0, 16.0).size(),
              bracket_roots(k, 400.0, 32.0).size());
}

TEST(BracketRoots, SortedDisjointAndOutsideGuard) {
  const auto br = bracket_roots(4, 400.0);
  for (std::size_t i = 0; i < br.size(); ++i) {
    EXPECT_LT(br[i].lo, br[i].hi);
    EXPECT_FALSE(br[i].lo < 16.0 && br[i].hi > 16.0);
    if (i) EXPECT_LE(br[i - 1].hi, br[i].lo);
  }
}

TEST(BracketRoots, RejectsLowDensity) {
  EXPECT_EQ(kind_of([] { bracket_roots(1, 10.0, 3.0); }),
            ErrorKind::invalid_argument);
}

TEST(RefineRoot, MatchesOracle) {
  for (int k = 1; k <= 4; ++k) {
    const auto roots = sector_eigenvalues(k, 1000.0);
    const auto& ref = oracle_values::sector[k - 1];
    ASSERT_GE(roots.size(), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i)
      EXPECT_LE(std::abs(roots[i] / ref[i] - 1), 1e-6) << "k=" << k;
  }
}

TEST(RefineRoot, EnclosureContract) {
  const auto br = bracket_roots(1, 100.0).front();
  const auto r = refine_root(1, br, 1e-14);
  EXPECT_LE(r.enclosure.hi - r.enclosure.lo, 1e-14 * r.lambda);
  EXPECT_GE(r.lambda, r.enclosure.lo);
  EXPECT_LE(r.lambda, r.enclosure.hi);

  // Already narrow: just the endpoint verification.
  const auto again = refine_root(1, r.enclosure, 1e-14);
  EXPECT_EQ(again.evaluations, 2);
  EXPECT_EQ(again.lambda, 0.5 * (r.enclosure.lo + r.enclosure.hi));

  const auto loose = refine_root(1, br, 1e-9);
  EXPECT_LE(std::abs(loose.lambda - r.lambda), 1e-9 * loose.lambda);
  EXPECT_EQ(refine_root(1, br, 1e-14).lambda, r.lambda);
}

TEST(RefineRoot, SameSignIsInvalidBracket) {
  const double lam = first_root(1);
  EXPECT_EQ(kind_of([&] { refine_root(1, {lam + 1, lam + 2}); }),
            ErrorKind::invalid_bracket);
}

TEST(BuildMode, BoundaryConditionsAndNorm) {
  for (int k : {1, 2, 5, 12}) {
    for (double lam : sector_eigenvalues(k, 600.0)) {
      const auto m = build_mode(k, lam, Phase::cosine);
      const auto& p = m.profile;
      const auto d0 = p.derivatives(0.0), d1 = p.derivatives(1.0);
      double cmax = 0;
      for (double c : p.c) cmax = std::max(cmax, std::abs(c));
      EXPECT_GT(cmax, 0);
      EXPECT_LE(std::abs(d0[0]), 1e-10 * cmax);
      EXPECT_LE(std::abs(d0[1]), 1e-10 * cmax * k);
      EXPECT_LE(std::abs(d1[1]), 1e-10 * cmax * k);
      const double k2 = double(k) * k;
      const double ventcel = k2 * (k2 - lam) * d1[0] - d1[3];
      const double scale = std::max({k2 * std::abs(k2 - lam), std::pow(lam, 1.5),
                                     std::pow(k2, 1.5)}) *
                           cmax;
      EXPECT_LE(std::abs(ventcel), 1e-8 * scale) << "k=" << k << " lam=" << lam;

      // Independent tensor quadrature of the H-norm via eval_mode:
      // periodic trapezoid in x1 (exact for these trig degrees), Simpson in x2.
      const int n1 = 4 * k + 8, n2 = 2000;
      double norm2 = 0;
      for (int a = 0; a < n1; ++a) {
        const double x1 = 2 * pi * a / n1;
        double col = 0;
        for (int b = 0; b <= n2; ++b) {
          const auto v = eval_mode(m, x1, double(b) / n2);
          const double w = (b == 0 || b == n2) ? 1.0 : (b % 2 ? 4.0 : 2.0);
          col += w * (v.u1 * v.u1 + v.u2 * v.u2);
        }
        norm2 += col / (3.0 * n2) * (2 * pi / n1);
        const double e = eval_mode(m, x1, 1.0).eta;
        norm2 += e * e * (2 * pi / n1);
      }
      EXPECT_NEAR(norm2, 1.0, 1e-8) << "k=" << k << " lam=" << lam;
    }
  }
}

TEST(BuildMode, FiveEquationsOnGrid) {
  const double lam = first_root(1);
  for (Phase ph : {Phase::cosine, Phase::sine}) {
    const auto m = build_mode(1, lam, ph);
    double mom1 = 0, mom2 = 0, div = 0, scale = 0, wall = 0, top = 0;
    for (int a = 0; a < 20; ++a) {
      for (int b = 0; b < 20; ++b) {
        const double x1 = 2 * pi * a / 20.0, x2 = b / 19.0;
        const auto j = eval_jet(m, x1, x2);
        mom1 = std::max(mom1, std::abs(-j.lap_u1 + j.p_x1 - lam * j.u1));
        mom2 = std::max(mom2, std::abs(-j.lap_u2 + j.p_x2 - lam * j.u2));
        div = std::max(div, std::abs(j.u1_x1 + j.u2_x2));
        scale = std::max({scale, std::abs(j.lap_u1), std::abs(j.lap_u2),
                          std::abs(j.p_x1), std::abs(j.p_x2),
                          lam * std::abs(j.u1), lam * std::abs(j.u2)});
      }
      const double x1 = 2 * pi * a / 20.0;
      const auto w0 = eval_mode(m, x1, 0.0), w1 = eval_mode(m, x1, 1.0);
      wall = std::max({wall, std::abs(w0.u1), std::abs(w0.u2), std::abs(w1.u1),
                       std::abs(w1.u2 - w1.eta)});
      // lambda eta = -d11 eta - p on the top boundary
      const auto j1 = eval_jet(m, x1, 1.0);
      top = std::max(top, std::abs(lam * w1.eta + j1.u2_x1x1 + j1.p));
    }
    EXPECT_LE(mom1, 1e-7 * scale);
    EXPECT_LE(mom2, 1e-7 * scale);
    EXPECT_LE(div, 1e-7 * scale);
    EXPECT_LE(wall, 1e-10);
    EXPECT_LE(top, 1e-7 * scale);
  }
}

TEST(BuildMode, PhasePairIsOrthogonal) {
  const double lam = first_root(2);
  const auto c = build_mode(2, lam, Phase::cosine);
  const auto s = build_mode(2, lam, Phase::sine);
  double ip = 0, eta_mean = 0;
  const int n1 = 64, n2 = 200;
  for (int a = 0; a < n1; ++a) {
    const double x1 = 2 * pi * a / n1;
    for (int b = 0; b <= n2; ++b) {
      const double x2 = double(b) / n2, w = (b == 0 || b == n2) ? 0.5 : 1.0;
      const auto u = eval_mode(c, x1, x2), v = eval_mode(s, x1, x2);
      ip += w * (u.u1 * v.u1 + u.u2 * v.u2) / n2 * (2 * pi / n1);
    }
    ip += eval_mode(c, x1, 1.0).eta * eval_mode(s, x1, 1.0).eta * (2 * pi / n1);
    eta_mean += eval_mode(c, x1, 1.0).eta / n1;
  }
  EXPECT_LE(std::abs(ip), 1e-12);
  EXPECT_LE(std::abs(eta_mean), 1e-14);
}

TEST(BuildMode, RejectsNonEigenvalue) {
  const double lam = first_root(1);
  EXPECT_EQ(kind_of([&] { build_mode(1, lam * 1.01, Phase::cosine); }),
            ErrorKind::not_an_eigenvalue);
  EXPECT_EQ(kind_of([&] { build_mode(0, lam, Phase::cosine); }),
            ErrorKind::invalid_argument);
}

TEST(EvalMode, BoundaryValuesAndDomain) {
  const auto m = build_mode(3, first_root(3), Phase::sine);
  for (double x1 : {0.0, 0.7, 3.0, 6.2}) {
    const auto b = eval_mode(m, x1, 0.0), t = eval_mode(m, x1, 1.0);
    EXPECT_LE(std::abs(b.u1) + std::abs(b.u2), 1e-12);
    EXPECT_LE(std::abs(t.u1), 1e-12);
    EXPECT_NEAR(t.u2, t.eta, 1e-14);
  }
  EXPECT_EQ(kind_of([&] { eval_mode(m, 2 * pi, 0.5); }),
            ErrorKind::invalid_argument);
  EXPECT_EQ(kind_of([&] { eval_mode(m, -0.1, 0.5); }),
            ErrorKind::invalid_argument);
  EXPECT_EQ(kind_of([&] { eval_mode(m, 1.0, 1.0001); }),
            ErrorKind::invalid_argument);
}

TEST(AssembleBasis, MatchesOracleCountsAtFifty) {
  const auto basis = assemble_basis(50.0, default_k_max(50.0));
  // k = 0: pi^2, 4pi^2; sectors: each oracle root below 50 gives two phases.
  std::size_t expected = 2;
  for (const auto& row : oracle_values::lowest)
    for (double v : row) expected += v <= 50.0 ? 2 : 0;
  EXPECT_EQ(basis.size(), expected);
  EXPECT_EQ(basis.modes.front().k, 1);
  bool has1 = false, has2 = false;
  for (const auto& m : basis.modes) {
    if (m.k == 0 && m.n == 1) has1 = std::abs(m.lambda - pi * pi) < 1e-12;
    if (m.k == 0 && m.n == 2) has2 = std::abs(m.lambda - 4 * pi * pi) < 1e-12;
  }
  EXPECT_TRUE(has1 && has2);
}

TEST(AssembleBasis, OrderingAndCutoff) {
  const auto basis = assemble_basis(200.0, default_k_max(200.0));
  for (std::size_t i = 0; i < basis.size(); ++i) {
    EXPECT_LE(basis.modes[i].lambda, 200.0);
    if (i) {
      const auto& a = basis.modes[i - 1];
      const auto& b = basis.modes[i];
      EXPECT_TRUE(a.lambda < b.lambda ||
                  (a.lambda == b.lambda &&
                   (a.k < b.k || (a.k == b.k && a.phase < b.phase))));
    }
  }
}

TEST(AssembleBasis, IncompleteWhenKMaxTooSmall) {
  EXPECT_EQ(kind_of([] { assemble_basis(100.0, 3); }),
            ErrorKind::incomplete_basis);
}

TEST(AssembleBasis, SmallestRootPerSectorNondecreasing) {
  double prev = 0;
  for (int k = 1; k <= 8; ++k) {
    const double r = sector_eigenvalues(k, 200.0).front();
    EXPECT_NEAR(r / oracle_values::lowest[k - 1][0], 1.0, 1e-6);
    EXPECT_GE(r, prev);
    EXPECT_GT(r, double(k) * k);
    prev = r;
  }
}

TEST(AssembleBasis, CountMonotoneInCutoff) {
  std::size_t prev = 0;
  for (double lam : {10.0, 30.0, 60.0, 120.0, 240.0}) {
    const auto n = assemble_basis(lam, default_k_max(lam)).size();
    EXPECT_GE(n, prev);
    prev = n;
  }
}

TEST(AssembleBasis, IndependentOfThreadCount) {
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto a = assemble_basis(150.0, default_k_max(150.0));
  omp_set_num_threads(3);
  const auto b = assemble_basis(150.0, default_k_max(150.0));
  omp_set_num_threads(saved);
  EXPECT_EQ(a.size(), b.size());
  EXPECT_EQ(a.id(), b.id());
}

TEST(Oracle, ZeroSectorIsAnalytic) {
  const auto o = oracle_eigs(0, 200, 5);
  for (int n = 1; n <= 5; ++n)
    EXPECT_LE(std::abs(o.lambda[n - 1] / (n * n * pi * pi) - 1), 1e-6);
}

TEST(Oracle, RefinementStableAndPositive) {
  const auto a = oracle_eigs(1, 400, 6);
  const auto b = oracle_eigs(1, 800, 6);
  for (int i = 0; i < 6; ++i) {
    EXPECT_GT(a.lambda[i], 0);
    EXPECT_LE(std::abs(a.lambda[i] / b.lambda[i] - 1), 1e-6);
    // The estimate is the fine-grid error, which bounds the extrapolated one.
    EXPECT_GE(a.error_estimate[i],
              std::abs(a.lambda[i] - oracle_values::sector[0][i]));
    EXPECT_LE(a.error_estimate[i], 1e-4 * a.lambda[i]);
  }
}

TEST(Oracle, RejectsBadArguments) {
  EXPECT_EQ(kind_of([] { oracle_eigs(1, 20, 3); }), ErrorKind::invalid_argument);
  EXPECT_EQ(kind_of([] { oracle_eigs(1, 100, 0); }),
            ErrorKind::invalid_argument);
}
