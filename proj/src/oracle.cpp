// Finite-difference cross-check for the sector eigenvalues.
//
// Unknowns per sector k (u1-hat = i v): v at cell centres, u2 at nodes
// 1..N (node N carries eta), p at cell centres. Second-order MAC stencils;
// v = 0 on both walls through antisymmetric ghosts, and the top row
// k^2 eta - p(1) = lambda eta reads p(1) by cubic extrapolation from the last
// four centres.

#include <Eigen/Dense>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <random>

#include "stokesheat/error.hpp"
#include "stokesheat/spectral_core.hpp"

namespace stokesheat {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

struct Pencil {
  SpMat a, b;
};

Pencil assemble(int k, int N) {
  const double h = 1.0 / N, ih2 = 1.0 / (h * h), k2 = double(k) * k;
  const int n = 3 * N;
  auto V = [](int i) { return i; };
  auto U = [N](int i) { return N + i - 1; };  // i = 1..N
  auto P = [N](int i) { return 2 * N + i; };
  std::vector<Eigen::Triplet<double>> ta, tb;
  int r = 0;
  for (int i = 0; i < N; ++i, ++r) {  // v momentum
    double diag = k2 + 2 * ih2;
    if (i > 0) ta.emplace_back(r, V(i - 1), -ih2);
    else diag += ih2;
    if (i < N - 1) ta.emplace_back(r, V(i + 1), -ih2);
    else diag += ih2;
    ta.emplace_back(r, V(i), diag);
    ta.emplace_back(r, P(i), double(k));
    tb.emplace_back(r, V(i), 1.0);
  }
  for (int i = 0; i < N; ++i, ++r) {  // divergence
    ta.emplace_back(r, V(i), -double(k));
    ta.emplace_back(r, U(i + 1), 1.0 / h);
    if (i > 0) ta.emplace_back(r, U(i), -1.0 / h);
  }
  for (int i = 1; i < N; ++i, ++r) {  // u2 momentum
    ta.emplace_back(r, U(i), k2 + 2 * ih2);
    if (i > 1) ta.emplace_back(r, U(i - 1), -ih2);
    ta.emplace_back(r, U(i + 1), -ih2);
    ta.emplace_back(r, P(i), 1.0 / h);
    ta.emplace_back(r, P(i - 1), -1.0 / h);
    tb.emplace_back(r, U(i), 1.0);
  }
  ta.emplace_back(r, U(N), k2);  // boundary heat row
  const double ex[4] = {35.0 / 16, -35.0 / 16, 21.0 / 16, -5.0 / 16};
  for (int j = 0; j < 4; ++j) ta.emplace_back(r, P(N - 1 - j), -ex[j]);
  tb.emplace_back(r, U(N), 1.0);
  ++r;

  Pencil p{SpMat(n, n), SpMat(n, n)};
  p.a.setFromTriplets(ta.begin(), ta.end());
  p.b.setFromTriplets(tb.begin(), tb.end());
  return p;
}

std::vector<double> smallest(int k, int N, int count) {
  constexpr double sigma = -1.0;
  constexpr int max_iter = 500;
  const Pencil pen = assemble(k, N);
  SpMat shifted = pen.a - sigma * pen.b;
  Eigen::SparseLU<SpMat> lu;
  lu.analyzePattern(shifted);
  lu.factorize(shifted);
  if (lu.info() != Eigen::Success)
    fail(ErrorKind::oracle_failure,
         "oracle_eigs: factorization failed at shift " + std::to_string(sigma));

  const int n = static_cast<int>(shifted.rows());
  const int m = std::min(n, count + 8);
  std::mt19937_64 rng(0);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd x(n, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i) x(i, j) = gauss(rng);

  std::vector<double> prev;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, m);
    const Eigen::MatrixXd bq = pen.b * q;
    Eigen::MatrixXd z(n, m);
    for (int j = 0; j < m; ++j) z.col(j) = lu.solve(bq.col(j));
    const Eigen::MatrixXd h = q.transpose() * z;
    Eigen::EigenSolver<Eigen::MatrixXd> es(h, false);
    std::vector<double> lam;
    for (int j = 0; j < m; ++j) {
      const double th = es.eigenvalues()(j).real();
      if (th > 0) lam.push_back(sigma + 1.0 / th);
    }
    std::sort(lam.begin(), lam.end());
    x = z;
    if (static_cast<int>(lam.size()) >= count) {
      lam.resize(count);
      if (static_cast<int>(prev.size()) == count) {
        double change = 0;
        for (int j = 0; j < count; ++j)
          change = std::max(change, std::abs(lam[j] - prev[j]) / lam[j]);
        // Rounding in the shifted solve puts the floor near 1e-12.
        if (change < 1e-10) return lam;
      }
      prev = std::move(lam);
    }
  }
  fail(ErrorKind::oracle_failure,
       "oracle_eigs: subspace iteration did not converge at shift " +
           std::to_string(sigma) + " (k=" + std::to_string(k) +
           ", N=" + std::to_string(N) + ")");
}

}  // namespace

OracleEigs oracle_eigs(int k, int N, int count) {
  require(k >= 0, "oracle_eigs: k must be >= 0");
  require(N >= 50, "oracle_eigs: N must be >= 50");
  require(count >= 1, "oracle_eigs: count must be >= 1");
  OracleEigs out;
  out.coarse = smallest(k, N, count);
  out.fine = smallest(k, 2 * N, count);
  for (int j = 0; j < count; ++j) {
    const double r = (4.0 * out.fine[j] - out.coarse[j]) / 3.0;
    out.lambda.push_back(r);
    out.error_estimate.push_back(std::abs(r - out.fine[j]));
  }
  return out;
}

}  // namespace stokesheat
