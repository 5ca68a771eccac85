#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stokesheat/control_loop.hpp"
#include "stokesheat/hilbert_ops.hpp"
#include "stokesheat/spectral_core.hpp"
#include "stokesheat/spectral_inequality.hpp"

namespace stokesheat::cli {

enum class OutputFormat { csv, structured };

struct RunConfig {
  struct Basis {
    double lambda_max = 0;  // required
    int k_max = 0;          // 0: smallest complete value for lambda_max
    SpectralTolerances tolerances;
  } basis;
  struct Region {
    std::array<double, 2> x1{0, 3.141592653589793};
    std::array<double, 2> x2{0.3, 0.7};
  } region;
  struct KernelConfig {
    double S0 = 1;
    std::optional<std::array<double, 2>> support;  // default [S0/4, 3 S0/4]
  } kernel;
  struct Schedule {
    double T = 1, gamma = 1.5, epsilon = 0.5, lambda_cap = 1024;
    double reg_threshold = 1e-12;
    double tolerance = 1e-4;  // control passes if final <= tolerance ||z0||
    std::uint64_t seed = 1;
    std::size_t z0_modes = 30;
  } schedule;
  struct Sweeps {
    std::vector<double> lambda_list{25, 50, 100, 200, 400};
    std::vector<double> t_list{0.1, 0.2, 0.4, 0.8};
  } sweeps;
  struct Io {
    std::string cache_path;
    std::string out_dir = "out";
    OutputFormat format = OutputFormat::csv;
  } io;

  int effective_k_max() const;
  ObservationRegion observation_region() const;
  Kernel make_kernel() const;
};

/// Command-line values that take precedence over the file.
struct Overrides {
  std::optional<double> lambda_max, gamma, epsilon, horizon;
  std::optional<std::array<double, 4>> region;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir, cache, format;
};

/// Strict parse: unknown keys, wrong types and violated constraints raise
/// Error(configuration) whose message starts with the offending key.
RunConfig parse_config(const std::string& json_text, const Overrides& ov = {});
RunConfig load_config(const std::string& path, const Overrides& ov = {});

/// The effective configuration, as accepted by parse_config.
std::string config_json(const RunConfig& cfg);

}  // namespace stokesheat::cli
