#include "stokesheat/error.hpp"

namespace stokesheat {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::degenerate_branch: return "degenerate-branch";
    case ErrorKind::invalid_bracket: return "invalid-bracket";
    case ErrorKind::not_an_eigenvalue: return "not-an-eigenvalue";
    case ErrorKind::multiplicity: return "multiplicity";
    case ErrorKind::incomplete_basis: return "incomplete-basis";
    case ErrorKind::oracle_failure: return "oracle-failure";
    case ErrorKind::malformed_file: return "malformed-file";
    case ErrorKind::version_mismatch: return "version-mismatch";
    case ErrorKind::observability_defect: return "observability-defect";
    case ErrorKind::configuration: return "configuration";
  }
  return "unknown";
}

}  // namespace stokesheat
