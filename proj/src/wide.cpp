#include "stokesheat/wide.hpp"

#include <vector>

namespace stokesheat {

std::string to_string(Wide value, int digits) {
  const int n = quadmath_snprintf(nullptr, 0, "%.*Qg", digits, value);
  std::vector<char> buf(static_cast<std::size_t>(n) + 1);
  quadmath_snprintf(buf.data(), buf.size(), "%.*Qg", digits, value);
  return std::string(buf.data(), static_cast<std::size_t>(n));
}

}  // namespace stokesheat
