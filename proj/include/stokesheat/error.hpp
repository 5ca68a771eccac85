#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stokesheat {

enum class ErrorKind {
  invalid_argument,
  degenerate_branch,
  invalid_bracket,
  not_an_eigenvalue,
  multiplicity,
  incomplete_basis,
  oracle_failure,
  malformed_file,
  version_mismatch,
  observability_defect,
  configuration,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it to an exit code without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(ErrorKind::invalid_argument, what);
}

}  // namespace stokesheat
