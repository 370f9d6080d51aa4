#pragma once

// Linearisation of the log-form operator
//
//   G(R) = ln(u_tt^{1-k} sigma_k(E_u)),
//
// pointwise (coefficients and the ellipticity quadratic form) and on the
// grid (stacked discrete residual and its sparse Jacobian).

#include "gsge/conformal.hpp"
#include "gsge/grid.hpp"
#include "gsge/types.hpp"

#include <Eigen/Sparse>

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace gsge {

/// Partial derivatives of G with respect to r_00, r_0i and r_ij. The
/// linearised operator is g_tt v_tt + 2 g_ti v_ti + g_ij M_ij(v).
struct GCoefficients {
  double g_tt = 0.0;
  Vector g_t;
  SymMatrix g;
};

/// Throws DomainError at a jet that is not strictly admissible.
GCoefficients g_coefficients(const Jet& jet, const Coefficients& c);

/// Normalised form
///   u_tt^{-1} sigma_k(E) xi_0^2 + (n-k+1) sigma_{k-1}(E) gamma u_tt |xi'|^2
///   + sigma_k^{ij}(E) (u_ti xi_0/sqrt(u_tt) - sqrt(u_tt) xi_i)(same in j)
/// of the principal symbol; xi = (xi_0, xi_1..xi_n).
double ellipticity_form(const Jet& jet, const Coefficients& c, const Vector& xi);

/// The same quadratic form contracted directly from the coefficients of the
/// (u_tt^{1-k}-scaled) linearisation, before completing the square.
double ellipticity_contraction(const Jet& jet, const Coefficients& c, const Vector& xi);

/// Square sparse matrix over the interior unknowns. Row/column q maps to
/// node (level q / Ns + 1, spatial q % Ns).
struct SparseOperator {
  Eigen::SparseMatrix<double, Eigen::RowMajor> matrix;
  GridSpec grid;

  std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
  Node node(std::size_t q) const;
  std::size_t unknown(Node node) const;
};

/// Stacked discrete log-residual ln F_k(R[u]) - ln rhs over interior nodes
/// (rhs indexed like the interior unknowns), with admissibility bookkeeping.
struct ResidualEval {
  std::vector<double> residual;  // NaN where the node is not strictly admissible
  double sup = 0.0;
  double min_margin = 0.0;
  Node worst_margin_node;
  bool strict = true;
};

ResidualEval evaluate_residual(const SpacetimeField& field, std::span<const double> rhs,
                               const Problem& p, double margin, int workers = 1);

/// Discrete F_k (direct form) at every interior node.
std::vector<double> discrete_operator(const SpacetimeField& field, const Problem& p,
                                      int workers = 1);

/// Jacobian of the stacked log-residual with respect to the interior values.
/// Throws DomainError naming the worst node when any node is not strictly
/// admissible.
SparseOperator assemble_jacobian(const SpacetimeField& field, const Problem& p, int workers = 1);

/// Spatial problem on one time level: residual ln sigma_k(W[v]) - 2k v - ln rhs
/// over the torus nodes. `strict` is false when some lambda(W) leaves the cone.
struct SliceResidual {
  std::vector<double> residual;
  double sup = 0.0;
  double min_margin = 0.0;
  bool strict = true;
};

SliceResidual slice_residual(std::span<const double> v, std::span<const double> rhs,
                             const Problem& p, double margin);

/// Jacobian of slice_residual: sigma_k^{ij}(W)/sigma_k(W) M_ij(.) - 2k.
Eigen::SparseMatrix<double, Eigen::RowMajor> assemble_slice_jacobian(std::span<const double> v,
                                                                     const Problem& p);

struct LinearSolverOptions {
  /// Dense LU at or below this many unknowns.
  std::size_t dense_threshold = 500;
  double krylov_tol = 1e-13;
  int krylov_max_iterations = 4000;
};

struct LinearSolveInfo {
  std::string method;  // "dense-lu", "bicgstab" or "sparse-lu"
  int iterations = 0;
  double relative_residual = 0.0;
  bool ok = false;
};

/// Solves A x = b. Above the dense threshold uses BiCGSTAB with a diagonal
/// preconditioner and falls back to sparse LU if the Krylov solve misses
/// its tolerance.
std::vector<double> solve_linear(const Eigen::SparseMatrix<double, Eigen::RowMajor>& a,
                                 std::span<const double> b, const LinearSolverOptions& opts,
                                 LinearSolveInfo* info = nullptr);

/// "row col value" per line, 0-based, in row-major order.
void write_coordinate_text(const SparseOperator& op, std::ostream& out);

}  // namespace gsge
