#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "stokesheat/error.hpp"

using namespace stokesheat;

namespace {

int exit_code(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::configuration:
    case ErrorKind::invalid_argument:
      return 2;
    default:
      return 1;
  }
}

std::array<double, 4> parse_region(const std::string& s) {
  std::array<double, 4> r{};
  std::istringstream in(s);
  char sep = 0;
  for (int i = 0; i < 4; ++i) {
    if (i > 0 && !(in >> sep && sep == ',')) fail(ErrorKind::configuration, "--region: expected a,b,c,d");
    if (!(in >> r[i])) fail(ErrorKind::configuration, "--region: expected a,b,c,d");
  }
  if (!(in >> std::ws).eof()) fail(ErrorKind::configuration, "--region: trailing characters");
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Modal Stokes-heat eigenbasis, spectral inequality and null-control experiments"};
  app.require_subcommand(1);
  app.fallthrough();  // options are accepted after the subcommand name too

  std::string config_path, region;
  cli::Overrides ov;
  double lambda_max = 0, gamma = 0, epsilon = 0, horizon = 0;
  std::uint64_t seed = 0;
  std::string out_dir, cache, format;

  app.add_option("-c,--config", config_path, "JSON configuration file");
  auto* o_lam = app.add_option("--lambda-max,--Lambda-max", lambda_max, "basis.Lambda_max");
  auto* o_gam = app.add_option("--gamma", gamma, "schedule.gamma");
  auto* o_eps = app.add_option("--epsilon", epsilon, "schedule.epsilon");
  auto* o_T = app.add_option("--T,--horizon", horizon, "schedule.T");
  auto* o_seed = app.add_option("--seed", seed, "schedule.seed");
  auto* o_reg = app.add_option("--region", region, "x1_lo,x1_hi,x2_lo,x2_hi");
  auto* o_out = app.add_option("--out-dir", out_dir, "io.out_dir");
  auto* o_cache = app.add_option("--cache", cache, "io.cache_path");
  auto* o_fmt = app.add_option("--format", format, "io.format: csv or structured");

  using Cmd = int (*)(const cli::RunConfig&, std::ostream&, std::ostream&);
  const std::pair<const char*, Cmd> cmds[] = {
      {"eigens", cli::cmd_eigens},   {"specineq", cli::cmd_specineq},
      {"observe", cli::cmd_observe}, {"control", cli::cmd_control},
      {"verify", cli::cmd_verify}};
  const char* help[] = {"build or load the basis, write modes and orthonormality report",
                        "weighted Gramian min-eig sweep over sweeps.Lambda_list",
                        "observability constants over the Lambda and T sweeps",
                        "run the dyadic null-control schedule and write the run report",
                        "run the invariant suite"};
  Cmd chosen = nullptr;
  for (std::size_t i = 0; i < std::size(cmds); ++i)
    app.add_subcommand(cmds[i].first, help[i])->callback([&, i] { chosen = cmds[i].second; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*o_lam) ov.lambda_max = lambda_max;
    if (*o_gam) ov.gamma = gamma;
    if (*o_eps) ov.epsilon = epsilon;
    if (*o_T) ov.horizon = horizon;
    if (*o_seed) ov.seed = seed;
    if (*o_reg) ov.region = parse_region(region);
    if (*o_out) ov.out_dir = out_dir;
    if (*o_cache) ov.cache = cache;
    if (*o_fmt) ov.format = format;
    const auto cfg = config_path.empty() ? cli::parse_config("{}", ov)
                                         : cli::load_config(config_path, ov);
    return chosen(cfg, std::cout, std::cerr);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    if (e.kind() == ErrorKind::incomplete_basis)
      std::cerr << "hint: raise basis.k_max (or leave it 0 for the automatic value)\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
