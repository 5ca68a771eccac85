#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <ostream>
#include <random>

#include "output.hpp"
#include "stokesheat/error.hpp"
#include "stokesheat/format.hpp"

namespace stokesheat::cli {

namespace {

bool same_tolerances(const SpectralTolerances& a, const SpectralTolerances& b) {
  return a.degeneracy == b.degeneracy && a.scan_density == b.scan_density &&
         a.root_tol == b.root_tol && a.residual_gate == b.residual_gate &&
         a.multiplicity_gate == b.multiplicity_gate && a.quad_nodes == b.quad_nodes;
}

struct BasisChecks {
  double gram_dev = 0;      // max |H gram - I|
  double rayleigh_rel = 0;  // max |R + diag(lambda)| / lambda_row
  double parseval = 0;      // max |M(whole) + N - I|
  double zero_sector = 0;   // max |lambda - n^2 pi^2| over k = 0 modes
};

BasisChecks basis_checks(const EigenBasis& b) {
  BasisChecks c;
  const auto g = h_gram(b);
  const auto r = rayleigh_matrix(b);
  const auto whole = obs_gramian(b, ObservationRegion::whole_domain());
  const auto n = trace_gramian(b);
  for (std::size_t j = 0; j < b.size(); ++j) {
    for (std::size_t l = 0; l < b.size(); ++l) {
      const double id = j == l ? 1.0 : 0.0;
      c.gram_dev = std::max(c.gram_dev, std::abs(g(j, l) - id));
      c.rayleigh_rel = std::max(
          c.rayleigh_rel, std::abs(r(j, l) + id * b.modes[j].lambda) / b.modes[j].lambda);
      c.parseval = std::max(c.parseval, std::abs(whole.m(j, l) + n(j, l) - id));
    }
    const auto& m = b.modes[j];
    if (m.k == 0) {
      const double exact = m.n * m.n * std::numbers::pi * std::numbers::pi;
      c.zero_sector = std::max(c.zero_sector, std::abs(m.lambda - exact));
    }
  }
  return c;
}

StateVector initial_state(const EigenBasis& basis, const RunConfig& cfg) {
  const auto& s = cfg.schedule;
  if (s.z0_modes > basis.size())
    fail(ErrorKind::configuration,
         "schedule.z0_modes: " + std::to_string(s.z0_modes) + " exceeds the basis size " +
             std::to_string(basis.size()));
  if (s.z0_modes == 0) return StateVector::zeros(basis);
  return random_low_mode_state(basis, s.z0_modes, s.seed);
}

LRSchedule plan_schedule(const RunConfig& cfg) {
  const auto& s = cfg.schedule;
  auto sched = make_schedule(s.T, s.gamma, s.epsilon, s.lambda_cap);
  if (sched.max_lambda() > cfg.basis.lambda_max)
    fail(ErrorKind::configuration,
         "basis.Lambda_max: " + fmt17(cfg.basis.lambda_max) +
             " is below the largest stage cutoff " + fmt17(sched.max_lambda()) +
             " (lower schedule.Lambda_cap or raise basis.Lambda_max)");
  return sched;
}

/// Sweep cutoffs must lie inside the basis; checked by the commands that use
/// them so that a basis-only configuration stays valid.
void check_sweep_fits(const RunConfig& cfg) {
  const auto& l = cfg.sweeps.lambda_list;
  for (std::size_t i = 0; i < l.size(); ++i)
    if (l[i] > cfg.basis.lambda_max)
      fail(ErrorKind::configuration, "sweeps.Lambda_list[" + std::to_string(i) + "]: " +
                                         fmt17(l[i]) + " exceeds basis.Lambda_max = " +
                                         fmt17(cfg.basis.lambda_max));
}

void header(std::ostream& out, const char* cmd, const RunConfig& cfg) {
  out << "# stokesheat " << cmd << "\n# effective configuration:\n";
  const std::string js = config_json(cfg);
  std::size_t pos = 0;
  while (pos < js.size()) {
    const auto nl = js.find('\n', pos);
    out << "#   " << js.substr(pos, nl - pos) << "\n";
    pos = nl + 1;
  }
}

void wrote(std::ostream& out, const std::filesystem::path& p) {
  out << "wrote " << p.string() << "\n";
}

}  // namespace

EigenBasis obtain_basis(const RunConfig& cfg, std::ostream& log) {
  const int k_max = cfg.effective_k_max();
  const std::filesystem::path cache(cfg.io.cache_path);
  if (!cfg.io.cache_path.empty() && std::filesystem::exists(cache)) {
    try {
      auto b = load_basis(cache);
      const auto& md = b.metadata;
      if (md.lambda_max == cfg.basis.lambda_max && md.k_max == k_max &&
          same_tolerances(md.tolerances, cfg.basis.tolerances))
        return b;
      log << "warning: basis cache " << cache.string()
          << " was built for a different configuration; rebuilding\n";
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::malformed_file && e.kind() != ErrorKind::version_mismatch)
        throw;
      log << "warning: basis cache " << cache.string() << " is unusable (" << e.what()
          << "); rebuilding\n";
    }
  }
  AssembleOptions opts;
  opts.tol = cfg.basis.tolerances;
  auto b = assemble_basis(cfg.basis.lambda_max, k_max, opts);
  if (!cfg.io.cache_path.empty()) {
    if (cache.has_parent_path()) std::filesystem::create_directories(cache.parent_path());
    save_basis(b, cache);
  }
  return b;
}

int cmd_eigens(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  header(out, "eigens", cfg);
  const auto b = obtain_basis(cfg, log);

  Table modes{"modes", 1, {"k", "n", "phase", "lambda"}, {}};
  for (const auto& m : b.modes)
    modes.add({std::int64_t{m.k}, std::int64_t{m.n},
               m.phase == Phase::none ? std::string("-") : to_string(m.phase), m.lambda});
  wrote(out, emit(modes, cfg));

  const auto c = basis_checks(b);
  struct Row { const char* name; double value, tol; };
  const Row rows[] = {{"gram_identity_max_dev", c.gram_dev, 1e-8},
                      {"rayleigh_max_rel_dev", c.rayleigh_rel, 1e-6},
                      {"parseval_max_dev", c.parseval, 1e-8},
                      {"zero_sector_max_abs_dev", c.zero_sector, 1e-10}};
  Table rep{"orthonormality", 1, {"check", "value", "tolerance", "pass"}, {}};
  bool ok = true;
  for (const auto& r : rows) {
    const bool pass = r.value <= r.tol;
    ok = ok && pass;
    rep.add({std::string(r.name), r.value, r.tol, std::int64_t{pass}});
    out << (pass ? "PASS " : "FAIL ") << r.name << " = " << fmt17(r.value) << " (tol "
        << fmt17(r.tol) << ")\n";
  }
  wrote(out, emit(rep, cfg));
  out << "modes: " << b.size() << ", Lambda_max " << fmt17(b.cutoff) << ", k_max "
      << b.k_range << ", basis " << b.id() << "\n";
  return ok ? 0 : 1;
}

int cmd_specineq(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  if (cfg.sweeps.lambda_list.empty())
    fail(ErrorKind::configuration, "sweeps.Lambda_list: empty; specineq needs at least 3 cutoffs");
  if (cfg.sweeps.lambda_list.size() < 3)
    fail(ErrorKind::configuration, "sweeps.Lambda_list: specineq needs at least 3 cutoffs for the fit");
  check_sweep_fits(cfg);
  header(out, "specineq", cfg);
  const auto b = obtain_basis(cfg, log);
  const auto rep = spec_ineq_report(b, cfg.sweeps.lambda_list, cfg.observation_region(),
                                    cfg.make_kernel());

  Table rows{"specineq", 1,
             {"Lambda", "dim", "min_eig", "log_min_eig", "sqrt_Lambda", "trace",
              "min_eig_M", "implied_constant", "violation"},
             {}};
  bool ok = true;
  for (const auto& r : rep.rows) {
    const double me = static_cast<double>(r.min_eig);
    const double lme = r.min_eig > 0 ? static_cast<double>(num::log(r.min_eig))
                                     : std::numeric_limits<double>::quiet_NaN();
    ok = ok && r.min_eig > 0 && !r.violation;
    rows.add({r.lambda, static_cast<std::int64_t>(r.dim), me, lme, std::sqrt(r.lambda),
              static_cast<double>(r.trace), static_cast<double>(r.min_eig_m),
              r.implied_constant, std::int64_t{r.violation}});
    out << "Lambda " << fmt17(r.lambda) << "  dim " << r.dim << "  min_eig " << fmt17(me) << "\n";
  }
  wrote(out, emit(rows, cfg));

  Table fit{"specineq_fit", 1,
            {"quantity", "slope", "intercept", "r_squared", "points", "kernel_l2"}, {}};
  fit.add({std::string("-log_min_eig_vs_sqrt_Lambda"), rep.fit.slope, rep.fit.intercept,
           rep.fit.r_squared, static_cast<std::int64_t>(rep.fit.points), rep.kernel_l2});
  wrote(out, emit(fit, cfg));
  out << "fit: slope " << fmt17(rep.fit.slope) << ", R^2 " << fmt17(rep.fit.r_squared) << "\n";
  if (!ok) out << "FAIL: a min-eig is not positive\n";
  return ok ? 0 : 1;
}

int cmd_observe(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  const auto& lams = cfg.sweeps.lambda_list;
  const auto& ts = cfg.sweeps.t_list;
  if (lams.empty()) fail(ErrorKind::configuration, "sweeps.Lambda_list: empty");
  if (ts.empty()) fail(ErrorKind::configuration, "sweeps.T_list: empty");
  check_sweep_fits(cfg);
  header(out, "observe", cfg);
  const auto b = obtain_basis(cfg, log);
  const auto gram = obs_gramian(b, cfg.observation_region());

  Table rows{"observe", 1, {"Lambda", "T", "dim", "C_obs", "log_C_obs"}, {}};
  std::vector<std::vector<double>> c(lams.size(), std::vector<double>(ts.size()));
  for (std::size_t i = 0; i < lams.size(); ++i)
    for (std::size_t j = 0; j < ts.size(); ++j) {
      ObsConstant o;
      try {
        o = obs_constant(b, gram, lams[i], ts[j]);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::observability_defect) throw;
        log << "observability defect at Lambda " << fmt17(lams[i]) << ", T " << fmt17(ts[j])
            << ": " << e.what() << "\n";
        return 1;
      }
      c[i][j] = o.value;
      rows.add({lams[i], ts[j], static_cast<std::int64_t>(o.indices.size()), o.value,
                std::log(o.value)});
    }
  wrote(out, emit(rows, cfg));

  // Horizon fits per Lambda, cutoff fits per T, where enough points exist.
  Table fits{"observe_fit", 1,
             {"sweep", "fixed", "slope", "intercept", "r_squared", "points", "monotone"}, {}};
  bool ok = true;
  for (std::size_t i = 0; i < lams.size(); ++i) {
    std::vector<std::size_t> order(ts.size());
    for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
    std::ranges::sort(order, {}, [&](std::size_t j) { return ts[j]; });
    bool mono = true;
    for (std::size_t j = 0; j < ts.size(); ++j) {
      mono = mono && std::isfinite(c[i][order[j]]);
      if (j > 0) mono = mono && c[i][order[j]] <= c[i][order[j - 1]];
    }
    ok = ok && mono;
    out << (mono ? "PASS" : "FAIL") << " C_obs finite and nonincreasing in T at Lambda "
        << fmt17(lams[i]) << "\n";
    LineFit f{std::nan(""), std::nan(""), std::nan(""), 0};
    if (ts.size() >= 4) {
      try {
        f = cost_and_constant_fit(SweepKind::horizon, ts, c[i], cfg.schedule.gamma);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::invalid_argument) throw;
      }
    }
    fits.add({std::string("horizon"), lams[i], f.slope, f.intercept, f.r_squared,
              static_cast<std::int64_t>(f.points), std::int64_t{mono}});
  }
  if (lams.size() >= 4)
    for (std::size_t j = 0; j < ts.size(); ++j) {
      std::vector<double> col(lams.size());
      for (std::size_t i = 0; i < lams.size(); ++i) col[i] = c[i][j];
      LineFit f{std::nan(""), std::nan(""), std::nan(""), 0};
      try {
        f = cost_and_constant_fit(SweepKind::cutoff, lams, col);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::invalid_argument) throw;
      }
      fits.add({std::string("cutoff"), ts[j], f.slope, f.intercept, f.r_squared,
                static_cast<std::int64_t>(f.points), std::int64_t{-1}});
    }
  wrote(out, emit(fits, cfg));
  return ok ? 0 : 1;
}

int cmd_control(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  const auto sched = plan_schedule(cfg);
  header(out, "control", cfg);
  const auto b = obtain_basis(cfg, log);
  const auto z0 = initial_state(b, cfg);
  const auto rep = run_lr(b, obs_gramian(b, cfg.observation_region()), z0, sched,
                          cfg.schedule.reg_threshold);
  const bool csv = cfg.io.format == OutputFormat::csv;
  wrote(out, emit_text(csv ? "run_report.csv" : "run_report.json",
                       csv ? run_report_csv(rep) : run_report_json(rep), cfg));

  std::size_t effective = 0;
  for (const auto& s : rep.stages) effective += s.dim > 0;
  const bool ok = rep.final_norm <= cfg.schedule.tolerance * rep.z0_norm;
  out << "stages " << rep.stages.size() << " (with control " << effective << "), ||z0|| "
      << fmt17(rep.z0_norm) << ", final " << fmt17(rep.final_norm) << ", cost "
      << fmt17(rep.total_cost) << ", C1 " << fmt17(rep.c1) << "\n"
      << (ok ? "PASS" : "FAIL") << " final norm <= " << fmt17(cfg.schedule.tolerance)
      << " ||z0||\n";
  return ok ? 0 : 1;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  check_sweep_fits(cfg);
  header(out, "verify", cfg);
  Table t{"verify", 1, {"check", "value", "tolerance", "status"}, {}};
  bool ok = true;
  auto report = [&](const std::string& name, double value, double tol, bool pass) {
    ok = ok && pass;
    t.add({name, value, tol, std::string(pass ? "PASS" : "FAIL")});
    out << (pass ? "PASS " : "FAIL ") << name << " = " << fmt17(value) << "\n";
  };
  auto skip = [&](const std::string& name, const std::string& why) {
    t.add({name, std::nan(""), std::nan(""), std::string("SKIP")});
    out << "SKIP " << name << " (" << why << ")\n";
  };

  const auto b = obtain_basis(cfg, log);
  const auto region = cfg.observation_region();
  const auto c = basis_checks(b);
  report("gram_identity_max_dev", c.gram_dev, 1e-8, c.gram_dev <= 1e-8);
  report("rayleigh_max_rel_dev", c.rayleigh_rel, 1e-6, c.rayleigh_rel <= 1e-6);
  report("parseval_max_dev", c.parseval, 1e-8, c.parseval <= 1e-8);
  report("zero_sector_max_abs_dev", c.zero_sector, 1e-10, c.zero_sector <= 1e-10);

  // Augmented field on the 30 lowest modes (fewer if the basis is smaller).
  {
    const std::size_t count = std::min<std::size_t>(30, b.size());
    std::mt19937_64 rng(cfg.schedule.seed);
    std::normal_distribution<double> g;
    std::vector<double> a(b.size(), 0.0);
    for (std::size_t j = 0; j < count; ++j) a[j] = g(rng);
    const auto f = augmented_field(b, a, b.modes[count - 1].lambda, region, {});
    const double r = residual_augmented(f, SampleGrid::uniform(cfg.kernel.S0, 12)).max();
    report("augmented_residual_max", r, 1e-7, r <= 1e-7);
  }

  const auto gram = obs_gramian(b, region);
  if (cfg.sweeps.lambda_list.size() >= 3) {
    const auto rep = spec_ineq_report(b, cfg.sweeps.lambda_list, region, cfg.make_kernel());
    double worst = std::numeric_limits<double>::infinity();
    bool lower = true;
    for (const auto& r : rep.rows) {
      worst = std::min(worst, static_cast<double>(r.min_eig));
      lower = lower && r.min_eig >= Wide(rep.kernel_l2) * r.min_eig_m * Wide(1 - 1e-12);
    }
    report("specineq_min_eig_positive", worst, 0, worst > 0 && !rep.any_violation);
    report("specineq_cosh_lower_bound", lower ? 1.0 : 0.0, 0, lower);
  } else {
    skip("specineq_min_eig_positive", "fewer than 3 cutoffs in sweeps.Lambda_list");
  }

  if (!cfg.sweeps.lambda_list.empty() && !cfg.sweeps.t_list.empty()) {
    const double lam = *std::ranges::max_element(cfg.sweeps.lambda_list);
    auto ts = cfg.sweeps.t_list;
    std::ranges::sort(ts);
    double prev = std::numeric_limits<double>::infinity(), last = 0;
    bool mono = true;
    try {
      for (double T : ts) {
        last = obs_constant(b, gram, lam, T).value;
        mono = mono && std::isfinite(last) && last <= prev;
        prev = last;
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::observability_defect) throw;
      log << e.what() << "\n";
      mono = false;
    }
    report("c_obs_nonincreasing_in_T", last, 0, mono);
  } else {
    skip("c_obs_nonincreasing_in_T", "empty sweep");
  }

  const auto s = cfg.schedule;
  const auto sched = make_schedule(s.T, s.gamma, s.epsilon, s.lambda_cap);
  if (sched.max_lambda() <= b.cutoff) {
    const auto z0 = initial_state(b, cfg);
    const auto rep = run_lr(b, gram, z0, sched, s.reg_threshold);
    const double rel = rep.z0_norm > 0 ? rep.final_norm / rep.z0_norm : 0.0;
    report("control_final_rel_norm", rel, s.tolerance, rel <= s.tolerance);
    bool stages = true;
    for (const auto& st : rep.stages)
      stages = stages && (st.low_residual <= 1e-8 * rep.z0_norm || st.threshold_binding);
    report("control_low_residuals", stages ? 1.0 : 0.0, 1e-8, stages);
  } else {
    skip("control_final_rel_norm", "basis below the largest stage cutoff");
  }

  wrote(out, emit(t, cfg));
  return ok ? 0 : 1;
}

}  // namespace stokesheat::cli
