#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gsge {

/// Largest supported spatial dimension. The augmented matrix is (n+1)x(n+1).
inline constexpr int kMaxDim = 8;

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::ColMajor, kMaxDim + 1, kMaxDim + 1>;
using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor,
                             kMaxDim + 1, 1>;

/// Dense symmetric n x n matrix. Symmetry is checked by the routines that
/// require it (see check_symmetric).
using SymMatrix = Matrix;

/// Eigenvalue vector lambda = (lambda_1, ..., lambda_n).
using EigenSpectrum = Vector;

/// Bad scalar parameter (k out of range, unknown preset, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input data (asymmetric matrix, non-finite entries, ...).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operation evaluated outside its domain, e.g. a log-residual at a jet that
/// is not strictly admissible. Carries the failing margin.
class DomainError : public std::domain_error {
 public:
  DomainError(const std::string& what, double margin)
      : std::domain_error(what), margin_(margin) {}
  double margin() const noexcept { return margin_; }

 private:
  double margin_;
};

/// Snapshot / config file problems.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws InputError unless a is square, finite and symmetric to `tol`.
void check_symmetric(const Matrix& a, double tol = 1e-14);

}  // namespace gsge
