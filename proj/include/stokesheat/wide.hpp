#pragma once

// binary128 arithmetic for the exponentially ill-conditioned Gram matrices.
// The observation Gramians restricted to a small region have smallest
// eigenvalues far below double resolution, so they are assembled and
// factored in quad precision.

#include <quadmath.h>

#include <string>

namespace stokesheat {

using Wide = __float128;

namespace num {

inline double abs(double x) { return x < 0 ? -x : x; }
inline Wide abs(Wide x) { return fabsq(x); }
inline double sqrt(double x) { return __builtin_sqrt(x); }
inline Wide sqrt(Wide x) { return sqrtq(x); }
inline double exp(double x) { return __builtin_exp(x); }
inline Wide exp(Wide x) { return expq(x); }
inline double expm1(double x) { return __builtin_expm1(x); }
inline Wide expm1(Wide x) { return expm1q(x); }
inline double log(double x) { return __builtin_log(x); }
inline Wide log(Wide x) { return logq(x); }
inline double log1p(double x) { return __builtin_log1p(x); }
inline Wide log1p(Wide x) { return log1pq(x); }
inline double sin(double x) { return __builtin_sin(x); }
inline Wide sin(Wide x) { return sinq(x); }
inline double cos(double x) { return __builtin_cos(x); }
inline Wide cos(Wide x) { return cosq(x); }

template <class T>
constexpr T epsilon();
template <>
constexpr double epsilon<double>() { return 2.220446049250313e-16; }
template <>
constexpr Wide epsilon<Wide>() { return FLT128_EPSILON; }

/// log(cosh(x)) without overflow.
template <class T>
T log_cosh(T x) {
  const T ax = abs(x);
  return ax + log1p(exp(T(-2) * ax)) - log(T(2));
}

inline Wide pi_wide() { return M_PIq; }

}  // namespace num

std::string to_string(Wide value, int digits = 36);

}  // namespace stokesheat
