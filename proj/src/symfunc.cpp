#include "gsge/symfunc.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

namespace gsge {

void check_symmetric(const Matrix& a, double tol) {
  if (a.rows() != a.cols() || a.rows() < 1) {
    throw InputError("matrix must be square and non-empty");
  }
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (!std::isfinite(a(i, j))) {
        throw InputError("matrix has a non-finite entry at (" + std::to_string(i) + "," +
                         std::to_string(j) + ")");
      }
      if (j > i && std::abs(a(i, j) - a(j, i)) > tol) {
        throw InputError("matrix is not symmetric at (" + std::to_string(i) + "," +
                         std::to_string(j) + ")");
      }
    }
  }
}

namespace {

using IndexList = std::array<int, kMaxDim + 1>;

// Determinant of A[rows, cols] (m x m) by Gaussian elimination with partial
// pivoting. m = 0 gives 1.
double minor_det(const Matrix& a, const IndexList& rows, const IndexList& cols, int m) {
  if (m == 0) return 1.0;
  if (m == 1) return a(rows[0], cols[0]);
  if (m == 2) {
    return a(rows[0], cols[0]) * a(rows[1], cols[1]) - a(rows[0], cols[1]) * a(rows[1], cols[0]);
  }
  std::array<double, (kMaxDim + 1) * (kMaxDim + 1)> w{};
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) w[i * m + j] = a(rows[i], cols[j]);
  double det = 1.0;
  for (int c = 0; c < m; ++c) {
    int piv = c;
    for (int r = c + 1; r < m; ++r)
      if (std::abs(w[r * m + c]) > std::abs(w[piv * m + c])) piv = r;
    if (w[piv * m + c] == 0.0) return 0.0;
    if (piv != c) {
      for (int j = 0; j < m; ++j) std::swap(w[c * m + j], w[piv * m + j]);
      det = -det;
    }
    const double d = w[c * m + c];
    det *= d;
    for (int r = c + 1; r < m; ++r) {
      const double f = w[r * m + c] / d;
      if (f == 0.0) continue;
      for (int j = c + 1; j < m; ++j) w[r * m + j] -= f * w[c * m + j];
    }
  }
  return det;
}

int members(unsigned mask, IndexList& out) {
  int m = 0;
  for (int i = 0; mask != 0; ++i, mask >>= 1)
    if (mask & 1u) out[m++] = i;
  return m;
}

// Copy of `s` (length m) without the entry at position `skip`.
void drop(const IndexList& s, int m, int skip, IndexList& out) {
  int o = 0;
  for (int a = 0; a < m; ++a)
    if (a != skip) out[o++] = s[a];
}

void check_k(int n, int k, int lo) {
  if (k < lo || k > n) {
    throw ParameterError("sigma index k=" + std::to_string(k) + " out of range [" +
                         std::to_string(lo) + "," + std::to_string(n) + "]");
  }
}

void check_dim(const Matrix& a) {
  if (a.rows() > kMaxDim + 1) throw ParameterError("matrix dimension exceeds supported maximum");
}

}  // namespace

double sigma(const EigenSpectrum& lambda, int k) {
  const int n = static_cast<int>(lambda.size());
  check_k(n, k, 0);
  return sigma_all(lambda)[static_cast<std::size_t>(k)];
}

std::vector<double> sigma_all(const EigenSpectrum& lambda) {
  const auto n = static_cast<std::size_t>(lambda.size());
  std::vector<double> e(n + 1, 0.0);
  e[0] = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j >= 1; --j) e[j] += lambda[static_cast<Eigen::Index>(i)] * e[j - 1];
  }
  return e;
}

std::vector<double> sigma_all(const SymMatrix& a, int kmax) {
  check_symmetric(a);
  check_dim(a);
  const int n = static_cast<int>(a.rows());
  check_k(n, kmax, 0);
  std::vector<double> e(static_cast<std::size_t>(kmax) + 1, 0.0);
  e[0] = 1.0;
  IndexList s{};
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    const int m = std::popcount(mask);
    if (m > kmax) continue;
    members(mask, s);
    e[static_cast<std::size_t>(m)] += minor_det(a, s, s, m);
  }
  return e;
}

double sigma(const SymMatrix& a, int k) {
  check_symmetric(a);
  check_dim(a);
  const int n = static_cast<int>(a.rows());
  check_k(n, k, 0);
  if (k == 0) return 1.0;
  double sum = 0.0;
  IndexList s{};
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != k) continue;
    members(mask, s);
    sum += minor_det(a, s, s, k);
  }
  return sum;
}

SymMatrix sigma_grad(const SymMatrix& a, int k) {
  check_symmetric(a);
  check_dim(a);
  const int n = static_cast<int>(a.rows());
  check_k(n, k, 0);
  SymMatrix g = SymMatrix::Zero(n, n);
  if (k == 0) return g;
  IndexList s{}, rows{}, cols{};
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != k) continue;
    members(mask, s);
    for (int pa = 0; pa < k; ++pa) {
      drop(s, k, pa, rows);
      for (int pb = pa; pb < k; ++pb) {
        drop(s, k, pb, cols);
        const double sign = ((pa + pb) % 2 == 0) ? 1.0 : -1.0;
        const double c = sign * minor_det(a, rows, cols, k - 1);
        g(s[pa], s[pb]) += c;
        if (pb != pa) g(s[pb], s[pa]) += c;
      }
    }
  }
  return g;
}

double SigmaHessian::contract(const Matrix& x, const Matrix& y) const {
  double sum = 0.0;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      for (int p = 0; p < n_; ++p)
        for (int q = 0; q < n_; ++q) sum += (*this)(i, j, p, q) * x(i, j) * y(p, q);
  return sum;
}

SigmaHessian sigma_hess(const SymMatrix& a, int k) {
  check_symmetric(a);
  check_dim(a);
  const int n = static_cast<int>(a.rows());
  check_k(n, k, 1);
  SigmaHessian raw(n);
  if (k >= 2) {
    IndexList s{}, rows1{}, cols1{}, rows2{}, cols2{};
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
      if (std::popcount(mask) != k) continue;
      members(mask, s);
      for (int pa = 0; pa < k; ++pa) {
        drop(s, k, pa, rows1);
        for (int pb = 0; pb < k; ++pb) {
          drop(s, k, pb, cols1);
          const double s1 = ((pa + pb) % 2 == 0) ? 1.0 : -1.0;
          // Expand the (k-1)-minor once more.
          for (int pc = 0; pc < k - 1; ++pc) {
            drop(rows1, k - 1, pc, rows2);
            for (int pd = 0; pd < k - 1; ++pd) {
              drop(cols1, k - 1, pd, cols2);
              const double s2 = ((pc + pd) % 2 == 0) ? 1.0 : -1.0;
              raw(s[pa], s[pb], rows1[pc], cols1[pd]) += s1 * s2 * minor_det(a, rows2, cols2, k - 2);
            }
          }
        }
      }
    }
  }
  // Average over the 8 index symmetries, once per orbit, so the result is
  // exactly symmetric.
  SigmaHessian h(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      for (int p = 0; p < n; ++p)
        for (int q = p; q < n; ++q) {
          if (p * n + q < i * n + j) continue;
          const double v = 0.125 * (raw(i, j, p, q) + raw(j, i, p, q) + raw(i, j, q, p) +
                                    raw(j, i, q, p) + raw(p, q, i, j) + raw(q, p, i, j) +
                                    raw(p, q, j, i) + raw(q, p, j, i));
          h(i, j, p, q) = h(j, i, p, q) = h(i, j, q, p) = h(j, i, q, p) = v;
          h(p, q, i, j) = h(q, p, i, j) = h(p, q, j, i) = h(q, p, j, i) = v;
        }
  return h;
}

double binomial(int n, int j) {
  if (j < 0 || j > n) return 0.0;
  double c = 1.0;
  for (int i = 1; i <= j; ++i) c = c * static_cast<double>(n - j + i) / static_cast<double>(i);
  return std::round(c);
}

bool in_gamma_k(const EigenSpectrum& lambda, int k, double margin) {
  const int n = static_cast<int>(lambda.size());
  check_k(n, k, 1);
  const auto e = sigma_all(lambda);
  for (int j = 1; j <= k; ++j) {
    if (!(e[static_cast<std::size_t>(j)] > margin * binomial(n, j))) return false;
  }
  return true;
}

double cone_margin(const SymMatrix& a, int k) {
  const int n = static_cast<int>(a.rows());
  check_k(n, k, 1);
  const auto e = sigma_all(a, k);
  double m = std::numeric_limits<double>::infinity();
  for (int j = 1; j <= k; ++j) m = std::min(m, e[static_cast<std::size_t>(j)] / binomial(n, j));
  return m;
}

bool in_gamma_k(const SymMatrix& a, int k, double margin) { return cone_margin(a, k) > margin; }

RankOneIdentities rank_one_identities(const SymMatrix& a, const Vector& x, int k) {
  check_symmetric(a);
  if (x.size() != a.rows()) throw InputError("vector length does not match matrix dimension");
  const SymMatrix xx = x * x.transpose();
  const SymMatrix shifted = a - xx;
  const SymMatrix g_shifted = sigma_grad(shifted, k);
  const SymMatrix g = sigma_grad(a, k);
  const double q = x.dot(g * x);
  return RankOneIdentities{x.dot(g_shifted * x), q, sigma(shifted, k), sigma(a, k) - q};
}

}  // namespace gsge
