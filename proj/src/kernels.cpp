#include "stokesheat/kernels.hpp"

#include <algorithm>
#include <numeric>

#include "stokesheat/error.hpp"

namespace stokesheat::kernels {

namespace {

template <class T>
struct Rotation {
  std::size_t p = 0, q = 0;
  T c = 1, s = 0, t = 0, app = 0, aqq = 0, apq = 0;
  bool active = false;
};

template <class T>
T default_tol(const JacobiOptions& opts) {
  return opts.tol > 0 ? T(opts.tol) : T(4) * num::epsilon<T>();
}

template <class T>
bool needs_rotation(T app, T aqq, T apq, T tol) {
  if (apq == T(0)) return false;
  return num::abs(apq) > tol * num::sqrt(num::abs(app * aqq));
}

template <class T>
void rotation_parameters(T app, T aqq, T apq, T& c, T& s, T& t) {
  const T theta = (aqq - app) / (T(2) * apq);
  const T at = num::abs(theta);
  if (at > T(1e150)) {
    t = T(1) / (T(2) * theta);
  } else {
    t = T(1) / (at + num::sqrt(theta * theta + T(1)));
    if (theta < T(0)) t = -t;
  }
  c = T(1) / num::sqrt(t * t + T(1));
  s = t * c;
}

template <class T>
SymmetricEigen<T> finish(const Matrix<T>& a, const Matrix<T>& vt, bool want,
                         int sweeps, bool converged) {
  const std::size_t n = a.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return a(i, i) < a(j, j);
  });
  SymmetricEigen<T> out;
  out.values.resize(n);
  out.sweeps = sweeps;
  out.converged = converged;
  for (std::size_t i = 0; i < n; ++i) out.values[i] = a(order[i], order[i]);
  if (want) {
    out.vectors = Matrix<T>(n, n);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = vt(order[j], i);
  }
  return out;
}

template <class T>
inline void rotate_rows(Matrix<T>& m, std::size_t p, std::size_t q, T c, T s) {
  T* rp = m.row(p).data();
  T* rq = m.row(q).data();
  const std::size_t n = m.cols();
  for (std::size_t j = 0; j < n; ++j) {
    const T xp = rp[j];
    const T xq = rq[j];
    rp[j] = c * xp - s * xq;
    rq[j] = s * xp + c * xq;
  }
}

}  // namespace

template <class T>
SymmetricEigen<T> jacobi_eigen(Matrix<T> a, const JacobiOptions& opts) {
  require(a.rows() == a.cols(), "jacobi_eigen: matrix must be square");
  const std::size_t n = a.rows();
  const T tol = default_tol<T>(opts);
  Matrix<T> vt = opts.want_vectors ? Matrix<T>::identity(n) : Matrix<T>();
  if (n < 2) return finish(a, vt, opts.want_vectors, 0, true);

  const std::size_t m = n + (n % 2);
  const std::size_t half = m / 2;
  std::vector<std::size_t> players(m);
  std::iota(players.begin(), players.end(), std::size_t{0});
  std::vector<Rotation<T>> rot(half);
  const bool par = n >= 48;

  int sweep = 0;
  bool converged = false;
  for (; sweep < opts.max_sweeps; ++sweep) {
    std::size_t rotations = 0;
    for (std::size_t round = 0; round + 1 < m; ++round) {
      std::size_t active = 0;
      for (std::size_t i = 0; i < half; ++i) {
        std::size_t p = players[i], q = players[m - 1 - i];
        if (p > q) std::swap(p, q);
        auto& r = rot[i];
        r = Rotation<T>{};
        r.p = p;
        r.q = q;
        if (q >= n) continue;
        const T app = a(p, p), aqq = a(q, q), apq = a(p, q);
        if (!needs_rotation(app, aqq, apq, tol)) continue;
        rotation_parameters(app, aqq, apq, r.c, r.s, r.t);
        r.app = app;
        r.aqq = aqq;
        r.apq = apq;
        r.active = true;
        ++active;
      }
      if (active > 0) {
        rotations += active;
        const auto pairs = static_cast<std::ptrdiff_t>(half);
        // A <- J^T A, transpose, J^T (.) again: all updates are row sweeps.
#pragma omp parallel for schedule(static) if (par)
        for (std::ptrdiff_t i = 0; i < pairs; ++i) {
          const auto& r = rot[i];
          if (!r.active) continue;
          rotate_rows(a, r.p, r.q, r.c, r.s);
          if (opts.want_vectors) rotate_rows(vt, r.p, r.q, r.c, r.s);
        }
        const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (par)
        for (std::ptrdiff_t i = 0; i < rows; ++i)
          for (std::size_t j = static_cast<std::size_t>(i) + 1; j < n; ++j)
            std::swap(a(i, j), a(j, i));
#pragma omp parallel for schedule(static) if (par)
        for (std::ptrdiff_t i = 0; i < pairs; ++i) {
          const auto& r = rot[i];
          if (!r.active) continue;
          rotate_rows(a, r.p, r.q, r.c, r.s);
        }
        for (const auto& r : rot) {
          if (!r.active) continue;
          // the 2x2 block is diagonal in exact arithmetic; use the accurate
          // update for its diagonal
          a(r.p, r.p) = r.app - r.t * r.apq;
          a(r.q, r.q) = r.aqq + r.t * r.apq;
          a(r.p, r.q) = T(0);
          a(r.q, r.p) = T(0);
        }
      }
      // circle method: keep players[0], rotate the rest by one
      const std::size_t last = players[m - 1];
      for (std::size_t i = m - 1; i > 1; --i) players[i] = players[i - 1];
      players[1] = last;
    }
    if (rotations == 0) {
      converged = true;
      break;
    }
  }
  return finish(a, vt, opts.want_vectors, sweep, converged);
}

template <class T>
Matrix<T> gram_rows(const Matrix<T>& v) {
  const std::size_t n = v.rows(), q = v.cols();
  Matrix<T> out(n, n);
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const T* ri = v.row(i).data();
    for (std::size_t j = i; j < n; ++j) {
      const T* rj = v.row(j).data();
      T acc = T(0);
      for (std::size_t k = 0; k < q; ++k) acc += ri[k] * rj[k];
      out(i, j) = acc;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) out(i, j) = out(j, i);
  return out;
}

template <class T>
CholeskyResult<T> cholesky(const Matrix<T>& a, T rel_pivot) {
  require(a.rows() == a.cols(), "cholesky: matrix must be square");
  const std::size_t n = a.rows();
  T max_diag = T(0);
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, a(i, i));
  Matrix<T> l(n, n);
  CholeskyResult<T> out;
  for (std::size_t j = 0; j < n; ++j) {
    T d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > rel_pivot * max_diag)) {
      out.failed_pivot = j;
      return out;
    }
    const T ljj = num::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      T s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  out.lower = std::move(l);
  return out;
}

template <class T>
void forward_substitute(const Matrix<T>& lower, std::vector<T>& b) {
  const std::size_t n = lower.rows();
  for (std::size_t i = 0; i < n; ++i) {
    T s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= lower(i, k) * b[k];
    b[i] = s / lower(i, i);
  }
}

template <class T>
void backward_substitute_transposed(const Matrix<T>& lower, std::vector<T>& b) {
  const std::size_t n = lower.rows();
  for (std::size_t ii = n; ii-- > 0;) {
    T s = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= lower(k, ii) * b[k];
    b[ii] = s / lower(ii, ii);
  }
}

template <class T>
T min_eigenvalue_psd(const Matrix<T>& k, const JacobiOptions& opts) {
  require(k.rows() == k.cols(), "min_eigenvalue_psd: matrix must be square");
  const std::size_t n = k.rows();
  if (n == 0) return T(0);
  Matrix<T> a = k;
  Matrix<T> l(n, n);
  std::size_t rank = n;
  T breakdown = T(0);
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t best = j;
    for (std::size_t i = j + 1; i < n; ++i)
      if (a(i, i) > a(best, best)) best = i;
    if (best != j) {
      std::swap_ranges(a.row(j).begin(), a.row(j).end(), a.row(best).begin());
      for (std::size_t r = 0; r < n; ++r) std::swap(a(r, j), a(r, best));
      for (std::size_t c = 0; c < j; ++c) std::swap(l(j, c), l(best, c));
    }
    const T d = a(j, j);
    if (!(d > T(0))) {
      rank = j;
      breakdown = d;
      break;
    }
    const T ljj = num::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) l(i, j) = a(i, j) / ljj;
    const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 8) if (n >= 48)
    for (std::ptrdiff_t ii = static_cast<std::ptrdiff_t>(j) + 1; ii < rows; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      for (std::size_t c = j + 1; c <= i; ++c) {
        a(i, c) -= l(i, j) * l(c, j);
        a(c, i) = a(i, c);
      }
    }
  }
  // The largest pivot left when the factorization stops bounds the
  // smallest eigenvalue from above; that is all working precision can say.
  if (rank < n) return breakdown;

  Matrix<T> p(n, n);
  const auto cols = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 8) if (n >= 48)
  for (std::ptrdiff_t ii = 0; ii < cols; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t c = i; c < n; ++c) {
      T s = T(0);
      for (std::size_t r = c; r < n; ++r) s += l(r, i) * l(r, c);
      p(i, c) = s;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < i; ++c) p(i, c) = p(c, i);
  JacobiOptions o = opts;
  o.want_vectors = false;
  const auto e = jacobi_eigen(std::move(p), o);
  if (!e.converged)
    fail(ErrorKind::configuration, "min_eigenvalue_psd: Jacobi did not converge");
  return e.values.front();
}

namespace serial {

template <class T>
SymmetricEigen<T> jacobi_eigen(Matrix<T> a, const JacobiOptions& opts) {
  require(a.rows() == a.cols(), "jacobi_eigen: matrix must be square");
  const std::size_t n = a.rows();
  const T tol = default_tol<T>(opts);
  Matrix<T> v = opts.want_vectors ? Matrix<T>::identity(n) : Matrix<T>();
  int sweep = 0;
  bool converged = n < 2;
  for (; sweep < opts.max_sweeps && !converged; ++sweep) {
    std::size_t rotations = 0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const T app = a(p, p), aqq = a(q, q), apq = a(p, q);
        if (!needs_rotation(app, aqq, apq, tol)) continue;
        ++rotations;
        T c, s, t;
        rotation_parameters(app, aqq, apq, c, s, t);
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const T akp = a(k, p), akq = a(k, q);
          a(k, p) = a(p, k) = c * akp - s * akq;
          a(k, q) = a(q, k) = s * akp + c * akq;
        }
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = a(q, p) = T(0);
        if (opts.want_vectors) {
          for (std::size_t k = 0; k < n; ++k) {
            const T vkp = v(k, p), vkq = v(k, q);
            v(k, p) = c * vkp - s * vkq;
            v(k, q) = s * vkp + c * vkq;
          }
        }
      }
    }
    if (rotations == 0) converged = true;
  }
  // finish() expects eigenvectors as rows
  Matrix<T> vt;
  if (opts.want_vectors) {
    vt = Matrix<T>(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) vt(j, i) = v(i, j);
  }
  return finish(a, vt, opts.want_vectors, sweep, converged);
}

template <class T>
Matrix<T> gram_rows(const Matrix<T>& v) {
  const std::size_t n = v.rows(), q = v.cols();
  Matrix<T> out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      T acc = T(0);
      for (std::size_t k = 0; k < q; ++k) acc += v(i, k) * v(j, k);
      out(i, j) = acc;
      out(j, i) = acc;
    }
  }
  return out;
}

template SymmetricEigen<double> jacobi_eigen(Matrix<double>, const JacobiOptions&);
template SymmetricEigen<Wide> jacobi_eigen(Matrix<Wide>, const JacobiOptions&);
template Matrix<double> gram_rows(const Matrix<double>&);
template Matrix<Wide> gram_rows(const Matrix<Wide>&);

}  // namespace serial

template SymmetricEigen<double> jacobi_eigen(Matrix<double>, const JacobiOptions&);
template SymmetricEigen<Wide> jacobi_eigen(Matrix<Wide>, const JacobiOptions&);
template Matrix<double> gram_rows(const Matrix<double>&);
template Matrix<Wide> gram_rows(const Matrix<Wide>&);
template double min_eigenvalue_psd(const Matrix<double>&, const JacobiOptions&);
template Wide min_eigenvalue_psd(const Matrix<Wide>&, const JacobiOptions&);
template CholeskyResult<double> cholesky(const Matrix<double>&, double);
template CholeskyResult<Wide> cholesky(const Matrix<Wide>&, Wide);
template void forward_substitute(const Matrix<double>&, std::vector<double>&);
template void forward_substitute(const Matrix<Wide>&, std::vector<Wide>&);
template void backward_substitute_transposed(const Matrix<double>&,
                                             std::vector<double>&);
template void backward_substitute_transposed(const Matrix<Wide>&,
                                             std::vector<Wide>&);

}  // namespace stokesheat::kernels
