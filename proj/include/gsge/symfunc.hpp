#pragma once

// Elementary symmetric functions sigma_k on vectors and symmetric matrices,
// Garding cone membership, and the rank-one update identities.
//
// Matrix routines never eigen-decompose: sigma_k(A) is the sum of the k x k
// principal minors of A, and its first and second derivatives are obtained
// by differentiating that sum entry by entry (cofactors and second
// cofactors). All functions are pure and thread-safe.

#include "gsge/types.hpp"

#include <vector>

namespace gsge {

/// sigma_k(lambda) by the product recursion prod_i (1 + lambda_i x).
/// k = 0 returns 1. Throws ParameterError unless 0 <= k <= n.
double sigma(const EigenSpectrum& lambda, int k);

/// sigma_0 .. sigma_n of lambda in one pass.
std::vector<double> sigma_all(const EigenSpectrum& lambda);

/// sigma_k of a symmetric matrix as the sum of its k x k principal minors.
double sigma(const SymMatrix& a, int k);

/// sigma_1 .. sigma_kmax of a symmetric matrix (index 0 holds sigma_0 = 1).
std::vector<double> sigma_all(const SymMatrix& a, int kmax);

/// d sigma_k(A) / d A_ij with all n^2 entries treated as independent.
/// Satisfies tr = (n-k+1) sigma_{k-1}(A) and sum_ij grad_ij A_ij = k sigma_k.
SymMatrix sigma_grad(const SymMatrix& a, int k);

/// Second derivatives of sigma_k, symmetrised over (i,j), (p,q) and
/// (ij)<->(pq), so that d^2/ds^2 sigma_k(A + sX) = H(ij,pq) X_ij X_pq for
/// every symmetric X. Dense n^4 storage; n <= kMaxDim.
class SigmaHessian {
 public:
  explicit SigmaHessian(int n) : n_(n), data_(static_cast<std::size_t>(n * n * n * n), 0.0) {}

  int dim() const noexcept { return n_; }
  double operator()(int i, int j, int p, int q) const { return data_[index(i, j, p, q)]; }
  double& operator()(int i, int j, int p, int q) { return data_[index(i, j, p, q)]; }

  /// H(ij,pq) X_ij Y_pq.
  double contract(const Matrix& x, const Matrix& y) const;

 private:
  std::size_t index(int i, int j, int p, int q) const {
    return static_cast<std::size_t>(((i * n_ + j) * n_ + p) * n_ + q);
  }
  int n_;
  std::vector<double> data_;
};

SigmaHessian sigma_hess(const SymMatrix& a, int k);

/// Binomial coefficient C(n, j) as a double.
double binomial(int n, int j);

/// True iff sigma_j(lambda) > margin * C(n, j) for every j = 1..k.
/// margin = 0 is the open cone.
bool in_gamma_k(const EigenSpectrum& lambda, int k, double margin = 0.0);

/// Same test on the spectrum of a symmetric matrix, through minor sums.
bool in_gamma_k(const SymMatrix& a, int k, double margin = 0.0);

/// min_{j<=k} sigma_j(A) / C(n, j): positive iff lambda(A) is in the open
/// cone, and in_gamma_k(A, k, m) <=> cone_margin(A, k) > m.
double cone_margin(const SymMatrix& a, int k);

/// Both sides of
///   sigma_k^{ij}(A - X (x) X) X_i X_j = sigma_k^{ij}(A) X_i X_j
///   sigma_k(A - X (x) X) = sigma_k(A) - sigma_k^{ij}(A) X_i X_j.
struct RankOneIdentities {
  double lhs1;
  double rhs1;
  double lhs2;
  double rhs2;
};

RankOneIdentities rank_one_identities(const SymMatrix& a, const Vector& x, int k);

}  // namespace gsge
