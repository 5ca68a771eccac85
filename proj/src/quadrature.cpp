#include "stokesheat/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "stokesheat/error.hpp"

namespace stokesheat {

namespace {

QuadratureRule<Wide> compute_gauss_wide(int n) {
  QuadratureRule<Wide> rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const Wide pi = num::pi_wide();
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Chebyshev-like initial guess, then Newton on P_n.
    Wide x = num::cos(pi * (Wide(i) + Wide(0.75)) / (Wide(n) + Wide(0.5)));
    Wide dp = 0;
    for (int it = 0; it < 100; ++it) {
      Wide p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const Wide p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / Wide(k);
        p0 = p1;
        p1 = p2;
      }
      dp = Wide(n) * (x * p1 - p0) / (x * x - 1);
      const Wide dx = p1 / dp;
      x -= dx;
      if (num::abs(dx) < Wide(1e-33)) break;
    }
    {
      // recompute derivative at the converged node
      Wide p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const Wide p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / Wide(k);
        p0 = p1;
        p1 = p2;
      }
      dp = Wide(n) * (x * p1 - p0) / (x * x - 1);
    }
    const Wide w = Wide(2) / ((1 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0;
  return rule;
}

const QuadratureRule<Wide>& cached_gauss(int n) {
  static std::mutex mutex;
  static std::map<int, QuadratureRule<Wide>> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_gauss_wide(n)).first;
  return it->second;
}

}  // namespace

template <class T>
QuadratureRule<T> gauss_legendre(int n) {
  require(n >= 1, "gauss_legendre: n must be positive");
  const auto& w = cached_gauss(n);
  QuadratureRule<T> rule;
  rule.nodes.reserve(n);
  rule.weights.reserve(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes.push_back(static_cast<T>(w.nodes[i]));
    rule.weights.push_back(static_cast<T>(w.weights[i]));
  }
  return rule;
}

template <class T>
QuadratureRule<T> composite_gauss(T a, T b, int panels, int n) {
  require(panels >= 1, "composite_gauss: panels must be positive");
  require(b > a, "composite_gauss: empty interval");
  const auto& base = cached_gauss(n);
  QuadratureRule<T> rule;
  rule.nodes.reserve(static_cast<std::size_t>(panels) * n);
  rule.weights.reserve(static_cast<std::size_t>(panels) * n);
  const Wide wa = a, wb = b;
  const Wide h = (wb - wa) / Wide(panels);
  for (int p = 0; p < panels; ++p) {
    const Wide lo = wa + Wide(p) * h;
    const Wide mid = lo + h / 2;
    for (int i = 0; i < n; ++i) {
      rule.nodes.push_back(static_cast<T>(mid + h / 2 * base.nodes[i]));
      rule.weights.push_back(static_cast<T>(h / 2 * base.weights[i]));
    }
  }
  return rule;
}

int panels_for_rate(double length, double max_rate) {
  // A 64-point rule integrates e^{i w x} to machine precision once the
  // half-panel phase w h / 2 stays well below the node count.
  const double per_panel = 24.0;
  const int p = static_cast<int>(std::ceil(length * max_rate / per_panel));
  return p < 1 ? 1 : p;
}

template QuadratureRule<double> gauss_legendre<double>(int);
template QuadratureRule<Wide> gauss_legendre<Wide>(int);
template QuadratureRule<double> composite_gauss<double>(double, double, int,
                                                        int);
template QuadratureRule<Wide> composite_gauss<Wide>(Wide, Wide, int, int);

}  // namespace stokesheat
