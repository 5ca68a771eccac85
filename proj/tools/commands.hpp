#pragma once

#include <iosfwd>

#include "config.hpp"

namespace stokesheat::cli {

// Each command returns the process exit code: 0 pass, 1 numerical or
// acceptance failure. Configuration problems surface as
// Error(configuration) and map to 2 in main.

/// Loads the basis from io.cache_path when it is readable and matches the
/// configuration; otherwise builds it (with a warning on `log` if a cache was
/// present but unusable) and refreshes the cache.
EigenBasis obtain_basis(const RunConfig& cfg, std::ostream& log);

int cmd_eigens(const RunConfig& cfg, std::ostream& out, std::ostream& log);
int cmd_specineq(const RunConfig& cfg, std::ostream& out, std::ostream& log);
int cmd_observe(const RunConfig& cfg, std::ostream& out, std::ostream& log);
int cmd_control(const RunConfig& cfg, std::ostream& out, std::ostream& log);
int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& log);

}  // namespace stokesheat::cli
