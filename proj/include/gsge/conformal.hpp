#pragma once

// Pointwise algebra of the equation
//
//   u_tt sigma_k(W[u]) - sigma_k^{ij}(W[u]) u_ti u_tj = psi,
//   W[u] = D^2 u + s du (x) du + (gamma Lap u - r/2 |Du|^2) I + A,
//
// on a flat torus in orthonormal coordinates, so covariant derivatives are
// plain partial derivatives.

#include "gsge/types.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace gsge {

/// Scalar part of the problem: dimension, sigma index and the three tensor
/// coefficients of W[u].
struct Coefficients {
  int n = 2;
  int k = 1;
  double gamma = 0.0;
  double s = 0.0;
  double r = 0.0;

  /// Throws ParameterError unless 1 <= k <= n <= kMaxDim and gamma >= 0.
  void validate() const;
};

/// All pointwise derivative data of u at one spacetime node, plus the local
/// tensor A and right-hand side psi.
struct Jet {
  double u = 0.0;
  double ut = 0.0;
  double utt = 0.0;
  Vector grad_u;
  Vector grad_ut;
  SymMatrix hess_u;
  SymMatrix a_here;
  double psi_here = 0.0;

  /// Zero derivatives, A = 0, psi = 0.
  static Jet zero(int n);
};

/// The (n+1)x(n+1) matrix [[u_tt, Du_t^T], [Du_t, W]].
struct AugmentedMatrix {
  Matrix r;

  int n() const { return static_cast<int>(r.rows()) - 1; }
  double r00() const { return r(0, 0); }
  Vector mixed() const { return r.col(0).tail(n()); }
  SymMatrix spatial() const { return r.bottomRightCorner(n(), n()); }

  static AugmentedMatrix from_blocks(double r00, const Vector& r0, const SymMatrix& block);
};

SymMatrix assemble_w(const Jet& jet, const Coefficients& c);

/// E_u = u_tt W[u] - Du_t (x) Du_t.
SymMatrix assemble_e(const Jet& jet, const Coefficients& c);

AugmentedMatrix assemble_r(const Jet& jet, const Coefficients& c);

/// F_k(R) = r_00 sigma_k(r) - sigma_k^{ij}(r) r_0i r_0j.
double f_k(const AugmentedMatrix& r, int k);

/// The operator value computed two ways: `direct` from W and Du_t, and
/// `via_e` = u_tt^{1-k} sigma_k(E_u), which is only defined for u_tt > 0.
struct ResidualPair {
  double direct = 0.0;
  std::optional<double> via_e;
};

ResidualPair residual_pair(const Jet& jet, const Coefficients& c);

enum class Admissibility { strict, degenerate, violated };

std::string_view to_string(Admissibility a);

struct AdmissibilityVerdict {
  Admissibility cls = Admissibility::violated;
  /// min_{j<=k} sigma_j(W) / C(n, j).
  double cone = 0.0;
  double utt = 0.0;
  double sigma_k_e = 0.0;

  /// Smallest of the three margins.
  double margin() const;
};

/// strict:     lambda(W) in Gamma_k(margin), u_tt > margin, sigma_k(E) > margin
/// degenerate: all three >= -margin (closed cones)
/// violated:   otherwise
AdmissibilityVerdict classify_admissible(const Jet& jet, const Coefficients& c, double margin);

/// ln(u_tt^{1-k} sigma_k(E)) - ln(psi_here). Throws DomainError when the jet
/// is not strictly admissible (margin 0) or psi_here <= 0.
double log_residual(const Jet& jet, const Coefficients& c);

struct Preset {
  double s;
  double r;
  double gamma;
};

/// Coefficient triples of the named conformal tensors:
///   schouten                       ( 1,  1,     0)
///   neg-schouten                   (-1, -1,     0)
///   neg-ricci                      (-1, -2,     1/(n-2))
///   neg-modified-schouten (tau<=1) (-1, tau-2, (1-tau)/(n-2))
/// The last two need n >= 3.
Preset preset_params(std::string_view name, int n = 0, double tau = 0.0);

struct RegimeReport {
  bool gamma_positive = false;  // gamma > 0
  bool gradient_pattern = false;  // r > 0 and 2 s k <= r n
  bool any() const { return gamma_positive || gradient_pattern; }
  /// Hypotheses of the approximation/uniqueness argument:
  /// (gamma > 0, r >= 0, 2sk <= rn) or (r > 0, 2sk <= rn).
  bool uniqueness = false;
  std::string message;
};

RegimeReport validate_theorem_regime(const Coefficients& c);

/// True iff (r/2, ..., r/2, r/2 - s) lies in the closed cone Gamma_k
/// (sigma_j >= -tol for j <= k).
bool approximation_cone_condition(const Coefficients& c, double tol = 1e-14);

}  // namespace gsge
