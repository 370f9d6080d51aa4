#pragma once

// Independent reference computations for the tests: eigenvalue routes,
// brute-force subset sums, finite differences and random generators.

#include "gsge/types.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>
#include <vector>

namespace oracle {

using gsge::Matrix;
using gsge::Vector;

/// Sum over all k-subsets of products, by enumerating bitmasks.
inline double sigma_subsets(const std::vector<double>& lambda, int k) {
  if (k == 0) return 1.0;
  const int n = static_cast<int>(lambda.size());
  double total = 0.0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) != k) continue;
    double prod = 1.0;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) prod *= lambda[static_cast<std::size_t>(i)];
    }
    total += prod;
  }
  return total;
}

inline std::vector<double> eigenvalues(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(a), Eigen::EigenvaluesOnly);
  const Eigen::VectorXd ev = es.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

inline double sigma_eigen(const Matrix& a, int k) { return sigma_subsets(eigenvalues(a), k); }

/// sigma_k^{ij} through the eigenbasis: Q diag(sigma_{k-1}(lambda | i)) Q^T.
inline Matrix sigma_grad_eigen(const Matrix& a, int k) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(a)};
  const Eigen::VectorXd ev = es.eigenvalues();
  const int n = static_cast<int>(ev.size());
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) {
    std::vector<double> rest;
    for (int j = 0; j < n; ++j) {
      if (j != i) rest.push_back(ev(j));
    }
    d(i) = sigma_subsets(rest, k - 1);
  }
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

/// Unit symmetric direction: e_i e_j^T + e_j e_i^T (i != j) or e_i e_i^T.
inline Matrix sym_unit(int n, int i, int j) {
  Matrix s = Matrix::Zero(n, n);
  s(i, j) = 1.0;
  s(j, i) = 1.0;
  return s;
}

inline Matrix random_symmetric(std::mt19937_64& rng, int n, double shift = 0.0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      a(i, j) = normal(rng);
      a(j, i) = a(i, j);
    }
  }
  a.diagonal().array() += shift;
  return a;
}

inline Vector random_vector(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace oracle
