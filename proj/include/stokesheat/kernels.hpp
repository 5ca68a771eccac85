#pragma once

// Data-parallel kernels. Each parallel kernel has a serial counterpart in
// `kernels::serial` that tests and the benchmark compare against. The
// parallel versions fix the floating-point operation order independently of
// the thread count, so their results are bitwise reproducible.

#include <optional>
#include <vector>

#include "stokesheat/dense.hpp"
#include "stokesheat/wide.hpp"

namespace stokesheat::kernels {

template <class T>
struct SymmetricEigen {
  std::vector<T> values;  // ascending
  Matrix<T> vectors;      // column j pairs with values[j]
  int sweeps = 0;
  bool converged = false;
};

struct JacobiOptions {
  bool want_vectors = true;
  int max_sweeps = 80;
  /// Rotate (p,q) while |a_pq| > tol * sqrt(|a_pp a_qq|); zero picks a
  /// multiple of machine epsilon. This relative criterion is what gives
  /// Jacobi its high relative accuracy on graded positive definite input.
  double tol = 0.0;
};

/// Round-robin (tournament ordering) Jacobi: each round applies n/2 disjoint
/// rotations, in parallel.
template <class T>
SymmetricEigen<T> jacobi_eigen(Matrix<T> a, const JacobiOptions& opts = {});

/// S_{jl} = sum_q V_{jq} V_{lq}; the result is symmetric by construction.
template <class T>
Matrix<T> gram_rows(const Matrix<T>& v);

/// Lower Cholesky factor, or the index of the first pivot that dropped below
/// `rel_pivot` times the largest diagonal entry.
template <class T>
struct CholeskyResult {
  std::optional<Matrix<T>> lower;
  std::size_t failed_pivot = 0;
};

template <class T>
CholeskyResult<T> cholesky(const Matrix<T>& a, T rel_pivot);

/// Smallest eigenvalue of a symmetric positive semidefinite matrix K.
/// Jacobi runs on L^T L, where K = P L L^T P^T is a Cholesky factorization
/// with diagonal pivoting: same spectrum, but far closer to diagonal, so a
/// strongly graded K needs a few sweeps instead of dozens. If a pivot is
/// not positive, K is singular at working precision and that pivot is
/// returned.
template <class T>
T min_eigenvalue_psd(const Matrix<T>& k, const JacobiOptions& opts = {});

/// Solves L x = b in place.
template <class T>
void forward_substitute(const Matrix<T>& lower, std::vector<T>& b);
/// Solves L^T x = b in place.
template <class T>
void backward_substitute_transposed(const Matrix<T>& lower, std::vector<T>& b);

namespace serial {

/// Classic cyclic-by-row Jacobi, kept as the reference implementation.
template <class T>
SymmetricEigen<T> jacobi_eigen(Matrix<T> a, const JacobiOptions& opts = {});

template <class T>
Matrix<T> gram_rows(const Matrix<T>& v);

}  // namespace serial

}  // namespace stokesheat::kernels
