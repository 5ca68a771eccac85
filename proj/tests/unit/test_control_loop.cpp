#include <gtest/gtest.h>
#include <omp.h>

#include <cmath>
#include <numbers>
#include <random>

#include "stokesheat/control_loop.hpp"
#include "stokesheat/error.hpp"
#include "stokesheat/kernels.hpp"
#include "time_oracles.hpp"

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

const EigenBasis& basis200() {
  static const EigenBasis b = assemble_basis(200.0, default_k_max(200.0));
  return b;
}

const ObservationRegion& region() {
  static const ObservationRegion r(0, pi, 0.3, 0.7);
  return r;
}

const ModalGramian& gram200() {
  static const ModalGramian g = obs_gramian(basis200(), region());
  return g;
}

StateVector random_state(const EigenBasis& b, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  auto s = StateVector::zeros(b);
  for (double& v : s.a) v = g(rng);
  return s;
}

}  // namespace

TEST(Schedule, WorkedExample) {
  const auto s = make_schedule(1.0, 2.0, 0.5, 1e9);
  ASSERT_GE(s.stages.size(), 2u);
  EXPECT_DOUBLE_EQ(s.stages[0].tau, 0.5);
  EXPECT_NEAR(s.stages[0].lambda, 64.0, 1e-12);
  EXPECT_DOUBLE_EQ(s.stages[1].tau, 0.25);
  EXPECT_NEAR(s.stages[1].lambda, 512.0, 1e-10);
}

TEST(Schedule, Invariants) {
  const auto s = make_schedule(0.8, 1.5, 0.4, 1024);
  double sum = 0;
  for (std::size_t k = 0; k < s.stages.size(); ++k) {
    const auto& st = s.stages[k];
    EXPECT_DOUBLE_EQ(st.start, sum);
    EXPECT_NEAR(st.passive + st.window, st.tau, 1e-15);
    EXPECT_NEAR(st.window, 0.4 * st.tau, 1e-15);
    EXPECT_GE(st.tau, 1e-4 * 0.8);
    EXPECT_LE(st.lambda, 1024.0);
    EXPECT_EQ(st.clipped, std::pow(0.4 * st.tau, -2.5) > 1024);
    if (k > 0) {
      EXPECT_DOUBLE_EQ(st.tau, s.stages[k - 1].tau / 2);
      EXPECT_GE(st.lambda, s.stages[k - 1].lambda);
    }
    sum += st.tau;
  }
  EXPECT_LE(sum, 0.8);
  EXPECT_GT(sum, 0.8 * (1 - 2e-4));
  EXPECT_EQ(s.stages.size(), make_schedule(0.8, 1.5, 0.4, 1024).stages.size());
}

TEST(Schedule, RejectsBadParameters) {
  EXPECT_EQ(kind_of([] { make_schedule(1, 1.0, 0.5, 100); }), ErrorKind::invalid_argument);
  EXPECT_EQ(kind_of([] { make_schedule(1.5, 2, 0.5, 100); }), ErrorKind::invalid_argument);
  EXPECT_EQ(kind_of([] { make_schedule(1, 2, 1.0, 100); }), ErrorKind::invalid_argument);
  EXPECT_EQ(kind_of([] { make_schedule(1, 2, 0.5, 0); }), ErrorKind::invalid_argument);
}

TEST(StageGramian, DiagonalAndLongWindowLimit) {
  const auto& b = basis200();
  const auto& m = gram200();
  const auto g = stage_gramian(b, m, 60.0, 0.05);
  for (std::size_t i = 0; i < g.indices.size(); ++i) {
    const double lam = b.modes[g.indices[i]].lambda;
    const double mjj = m.m(g.indices[i], g.indices[i]);
    EXPECT_NEAR(g.g(i, i), mjj * (1 - std::exp(-2 * lam * 0.05)) / (2 * lam),
                1e-15 * mjj);
  }
  const auto inf = stage_gramian(b, m, 60.0, 1e3);
  for (std::size_t i = 0; i < inf.indices.size(); ++i)
    for (std::size_t j = 0; j < inf.indices.size(); ++j) {
      const double s = b.modes[inf.indices[i]].lambda + b.modes[inf.indices[j]].lambda;
      EXPECT_NEAR(inf.g(i, j), m.m(inf.indices[i], inf.indices[j]) / s, 1e-16);
    }
}

TEST(StageGramian, MatchesTimeQuadrature) {
  const auto& b = basis200();
  const auto g = stage_gramian(b, gram200(), 200.0, 0.125);
  const auto q = oracle::gramian_by_simpson(b, gram200(), g.indices, 0.125, 10000);
  double scale = 0, err = 0;
  for (std::size_t i = 0; i < g.g.rows(); ++i)
    for (std::size_t j = 0; j < g.g.cols(); ++j) {
      scale = std::max(scale, std::abs(q(i, j)));
      err = std::max(err, std::abs(q(i, j) - g.g(i, j)));
    }
  EXPECT_LE(err, 1e-8 * scale);
}

TEST(StageControl, ZeroLowModesGiveZeroControl) {
  const auto& b = basis200();
  auto z = StateVector::zeros(b);
  z.a.back() = 1.0;  // above the cutoff
  const auto seg = stage_control(b, gram200(), z, 60.0, 0.0, 0.1);
  EXPECT_EQ(seg.cost, 0.0);
  EXPECT_EQ(seg.residual, 0.0);
  for (double c : seg.c) EXPECT_EQ(c, 0.0);
}

TEST(StageControl, LowestPairClosedForm) {
  // The lowest eigenvalue is a cosine/sine pair; on omega = (0, pi) x ...
  // the two partners are M-orthogonal, so each is steered by a scalar solve.
  const auto& b = basis200();
  const double lam1 = b.modes[0].lambda;
  ASSERT_EQ(b.indices_up_to(lam1).size(), 2u);
  ASSERT_LE(std::abs(gram200().m(0, 1)), 1e-15);
  const auto z = StateVector::unit(b, 0);
  const double w = 0.1;
  const auto seg = stage_control(b, gram200(), z, lam1, 0.0, w);
  ASSERT_EQ(seg.indices.size(), 2u);
  const double g11 = gram200().m(0, 0) * (1 - std::exp(-2 * lam1 * w)) / (2 * lam1);
  const double mu = std::exp(-lam1 * w);
  EXPECT_NEAR(seg.c[0], mu / g11, 1e-12 * mu / g11);
  EXPECT_LE(std::abs(seg.c[1]), 1e-12 * mu / g11);
  EXPECT_NEAR(seg.cost, mu * mu / g11, 1e-12 * mu * mu / g11);
  EXPECT_LE(seg.residual, 1e-15);
  const auto after = advance(b, gram200(), z, seg);
  EXPECT_NEAR(after.a[0], 0.0, 1e-14);
  EXPECT_NEAR(after.a[1], 0.0, 1e-14);
}

TEST(StageControl, LowBlockEqualsReportedResidual) {
  const auto& b = basis200();
  const auto z = random_low_mode_state(b, b.size(), 9);
  const auto seg = stage_control(b, gram200(), z, 16.0, 0.0, 0.3);
  ASSERT_LT(seg.cond_estimate * 2.2e-16, 1e-13);
  const auto after = advance(b, gram200(), z, seg);
  double low = 0;
  for (std::size_t j : seg.indices) low += after.a[j] * after.a[j];
  EXPECT_NEAR(std::sqrt(low), seg.residual, 1e-12);
}

TEST(StageControl, RandomStateSteersLowModes) {
  const auto& b = basis200();
  const auto z = random_low_mode_state(b, b.size(), 9);
  const double w = 0.05;
  const auto seg = stage_control(b, gram200(), z, 64.0, 0.0, w);
  ASSERT_FALSE(seg.threshold_binding);
  ASSERT_LT(seg.cond_estimate * 2.2e-16, 1e-8);
  double mu = 0;
  for (std::size_t j : seg.indices) mu += std::pow(std::exp(-b.modes[j].lambda * w) * z.a[j], 2);
  mu = std::sqrt(mu);
  EXPECT_LE(seg.residual, 1e-8 * mu);
  const auto after = advance(b, gram200(), z, seg);
  double low = 0;
  for (std::size_t j : seg.indices) low += after.a[j] * after.a[j];
  EXPECT_LE(std::sqrt(low), 1e-8 * mu);
}

TEST(Advance, ZeroControlIsSemigroup) {
  const auto& b = basis200();
  const auto z = random_state(b, 4);
  ControlSegment seg;
  seg.t0 = 0.2;
  seg.t1 = 0.25;
  seg.indices = {0, 3, 5};
  seg.c = {0, 0, 0};
  const auto a = advance(b, gram200(), z, seg);
  const auto s = semigroup(b, z, 0.05);
  for (std::size_t j = 0; j < b.size(); ++j) EXPECT_NEAR(a.a[j], s.a[j], 1e-15 * std::abs(z.a[j]) + 1e-300);
}

TEST(Advance, MatchesRungeKutta) {
  const auto& b = basis200();
  for (unsigned seed : {1u, 2u, 3u}) {
    const auto z = random_low_mode_state(b, b.size(), seed);
    const double w = 0.01 + 0.02 * seed;
    const auto seg = stage_control(b, gram200(), z, 40.0 * seed, 0.3, w);
    const auto exact = advance(b, gram200(), z, seg);
    const auto rk = oracle::rk4(b, gram200(), z, seg, 1e-4);
    double err = 0;
    for (std::size_t j = 0; j < b.size(); ++j) err = std::max(err, std::abs(exact.a[j] - rk.a[j]));
    EXPECT_LE(err, 1e-8) << "seed " << seed;
  }
}

TEST(Advance, EnergyBoundPerStage) {
  const auto& b = basis200();
  const auto z = random_state(b, 6);
  const auto seg = stage_control(b, gram200(), z, 120.0, 0.0, 0.03);
  const auto after = advance(b, gram200(), z, seg);
  const auto eig = kernels::jacobi_eigen(gram200().m, {.want_vectors = false});
  const double bound = z.norm() + std::sqrt(seg.cost) * std::sqrt(eig.values.back());
  EXPECT_LE(after.norm(), bound);
}

TEST(RunLr, ZeroInitialStateStaysZero) {
  const auto& b = basis200();
  const auto rep = run_lr(b, gram200(), StateVector::zeros(b),
                          make_schedule(1, 1.5, 0.5, 200), 1e-12);
  EXPECT_EQ(rep.final_norm, 0.0);
  EXPECT_EQ(rep.total_cost, 0.0);
  EXPECT_EQ(rep.c1, 0.0);
}

TEST(RunLr, LowestModeSingleStage) {
  const auto& b = basis200();
  LRSchedule s = make_schedule(1, 1.5, 0.5, 200);
  s.stages.resize(1);
  ASSERT_GE(s.stages[0].lambda, b.modes[0].lambda);
  const auto rep = run_lr(b, gram200(), StateVector::unit(b, 0), s, 1e-12);
  ASSERT_EQ(rep.stages.size(), 1u);
  EXPECT_LE(rep.stages[0].low_residual, 1e-12);
  // What is left lives above the stage cutoff: control spill.
  EXPECT_NEAR(rep.stages[0].high_norm, rep.stages[0].post_norm, 1e-12);
  EXPECT_GT(rep.stages[0].high_norm, 0.0);
}

TEST(RunLr, FullScheduleBeatsFirstStageOnly) {
  const auto& b = basis200();
  const auto full = make_schedule(1, 1.5, 0.5, 200);
  auto first = full;
  first.stages.resize(1);
  for (unsigned seed = 1; seed <= 4; ++seed) {
    const auto z = random_low_mode_state(b, 20, seed);
    const double a = run_lr(b, gram200(), z, full, 1e-12).final_norm;
    const double c = run_lr(b, gram200(), z, first, 1e-12).final_norm;
    EXPECT_LE(a, c) << "seed " << seed;
  }
}

TEST(RunLr, CutoffAboveBasisIsConfigurationError) {
  const auto& b = basis200();
  EXPECT_EQ(kind_of([&] {
              run_lr(b, gram200(), StateVector::zeros(b),
                     make_schedule(1, 1.5, 0.5, 1024), 1e-12);
            }),
            ErrorKind::configuration);
}

TEST(RunLr, TelescopingConstantIsAThreshold) {
  const auto& b = basis200();
  const auto s = make_schedule(1, 1.5, 0.5, 200);
  const auto z = random_low_mode_state(b, 20, 3);
  const auto terms = telescoping_terms(b, gram200(), z, s);
  const double c1 = telescoping_constant(terms, 0.5, 1.5);
  ASSERT_TRUE(std::isfinite(c1));
  ASSERT_GT(c1, 0);
  for (double f : {1.0, 1.5, 10.0, 1e3})
    EXPECT_TRUE(telescoping_holds(terms, c1 * f, 0.5, 1.5));
  EXPECT_FALSE(telescoping_holds(terms, c1 * (1 - 1e-6), 0.5, 1.5));
}

TEST(RunLr, ReportsAreByteIdenticalAcrossThreadCounts) {
  const auto& b = basis200();
  const auto s = make_schedule(1, 1.5, 0.5, 200);
  const auto z = random_low_mode_state(b, 30, 1);
  const int saved = omp_get_max_threads();
  std::vector<std::string> out;
  for (int t : {1, 2, 8}) {
    omp_set_num_threads(t);
    const auto rep = run_lr(b, obs_gramian(b, region()), z, s, 1e-12);
    out.push_back(run_report_csv(rep) + run_report_json(rep));
  }
  omp_set_num_threads(saved);
  EXPECT_EQ(out[0], out[1]);
  EXPECT_EQ(out[0], out[2]);
  EXPECT_NE(out[0].find("stage,tau,Lambda,pre_norm,post_norm,low_residual,cost,cond_estimate"),
            std::string::npos);
}

TEST(ObsConstant, LowestPairClosedForm) {
  // Two M-orthogonal partners with one eigenvalue: the worse observed one
  // sets the constant.
  const auto& b = basis200();
  const double lam = b.modes[0].lambda, T = 0.3;
  const auto o = obs_constant(b, gram200(), lam, T);
  const double m = std::min(gram200().m(0, 0), gram200().m(1, 1));
  const double expect =
      std::exp(-2 * lam * T) * 2 * lam / (m * (1 - std::exp(-2 * lam * T)));
  EXPECT_NEAR(o.value, expect, 1e-12 * expect);
  ASSERT_EQ(o.direction.size(), 2u);
  const std::size_t worse = gram200().m(0, 0) < gram200().m(1, 1) ? 0 : 1;
  EXPECT_NEAR(std::abs(o.direction[worse]), 1.0, 1e-12);
}

TEST(ObsConstant, WholeDomainBound) {
  const auto& b = basis200();
  const auto whole = obs_gramian(b, ObservationRegion::whole_domain());
  const double T = 0.2, lam = 100.0;
  const auto o = obs_constant(b, whole, lam, T);
  const auto idx = b.indices_up_to(lam);
  const auto n = principal(trace_gramian(b), std::span<const std::size_t>(idx));
  const double nmax = kernels::jacobi_eigen(n, {.want_vectors = false}).values.back();
  double lmax = 0;
  for (std::size_t j : idx) lmax = std::max(lmax, b.modes[j].lambda);
  const double lam1 = b.modes[0].lambda;
  const double bound =
      std::exp(-2 * lam1 * T) * 2 * lmax / ((1 - nmax) * (1 - std::exp(-2 * lmax * T)));
  EXPECT_GT(o.value, 0);
  EXPECT_LE(o.value, bound);
}

TEST(ObsConstant, NonincreasingInHorizon) {
  const auto& b = basis200();
  double prev = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 10; ++i) {
    const double c = obs_constant(b, gram200(), 100.0, 0.1 * i).value;
    EXPECT_TRUE(std::isfinite(c));
    EXPECT_LE(c, prev * (1 + 1e-12));
    prev = c;
  }
}

TEST(ObsConstant, InvisibleModeIsObservabilityDefect) {
  const auto& b = basis200();
  ModalGramian g = gram200();
  for (std::size_t j = 0; j < g.size(); ++j) {
    g.wide(2, j) = g.wide(j, 2) = 0;
    g.m(2, j) = g.m(j, 2) = 0;
  }
  try {
    obs_constant(b, g, 60.0, 0.5);
    ADD_FAILURE() << "expected an observability defect";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::observability_defect);
    EXPECT_NE(std::string(e.what()).find("near-null direction"), std::string::npos);
  }
}

TEST(Fit, SyntheticExactAndConstant) {
  const double gamma = 1.5;
  const std::vector<double> T{0.1, 0.2, 0.4, 0.8};
  std::vector<double> y, flat(4, 7.0);
  for (double t : T) y.push_back(std::exp(3 + 5 / std::pow(t, gamma)));
  const auto f = cost_and_constant_fit(SweepKind::horizon, T, y, gamma);
  EXPECT_NEAR(f.slope, 5, 1e-9);
  EXPECT_NEAR(f.intercept, 3, 1e-7);
  EXPECT_NEAR(cost_and_constant_fit(SweepKind::cutoff, T, flat).slope, 0.0, 1e-15);
}

TEST(Fit, RejectsTooFewOrDegeneratePoints) {
  const std::vector<double> three{0.1, 0.2, 0.4}, same{0.3, 0.3, 0.3, 0.3},
      v{1, 2, 3, 4};
  EXPECT_EQ(kind_of([&] { cost_and_constant_fit(SweepKind::horizon, three, three); }),
            ErrorKind::invalid_argument);
  EXPECT_EQ(kind_of([&] { cost_and_constant_fit(SweepKind::horizon, same, v); }),
            ErrorKind::invalid_argument);
}
