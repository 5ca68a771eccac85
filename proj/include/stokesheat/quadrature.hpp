#pragma once

#include <vector>

#include "stokesheat/wide.hpp"

namespace stokesheat {

template <class T>
struct QuadratureRule {
  std::vector<T> nodes;
  std::vector<T> weights;

  std::size_t size() const noexcept { return nodes.size(); }
};

/// n-point Gauss-Legendre rule on [-1, 1]. Nodes are computed by Newton
/// iteration in binary128 and rounded to T.
template <class T>
QuadratureRule<T> gauss_legendre(int n);

/// `panels` equal panels on [a, b], each carrying an n-point Gauss rule.
template <class T>
QuadratureRule<T> composite_gauss(T a, T b, int panels, int n);

/// Panels needed so that an n=64 rule resolves products of profiles whose
/// oscillation/decay rates are bounded by `max_rate` on an interval of
/// length `length`.
int panels_for_rate(double length, double max_rate);

extern template QuadratureRule<double> gauss_legendre<double>(int);
extern template QuadratureRule<Wide> gauss_legendre<Wide>(int);
extern template QuadratureRule<double> composite_gauss<double>(double, double,
                                                               int, int);
extern template QuadratureRule<Wide> composite_gauss<Wide>(Wide, Wide, int,
                                                           int);

}  // namespace stokesheat
