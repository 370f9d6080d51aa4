#pragma once

// Closed-form smooth fields on T^n x [0,1]:
//
//   f(x, t) = c(t) + sum_m a_m(t) prod_i cos(2 pi f_mi x_i + phi_mi),
//
// with c and a_m quadratic in t. Quadratic time dependence makes the
// central time differences exact, so grid errors come from space only.
// Used for boundary data, right-hand sides and manufactured solutions.

#include "gsge/conformal.hpp"
#include "gsge/grid.hpp"
#include "gsge/types.hpp"

#include <array>
#include <vector>

namespace gsge {

struct TrigMode {
  std::array<double, 3> amplitude{0.0, 0.0, 0.0};  // a(t) = a0 + a1 t + a2 t^2
  std::vector<int> frequency;                      // one per axis
  std::vector<double> phase;                       // radians, one per axis (default 0)
};

class TrigField {
 public:
  TrigField() = default;
  TrigField(int n, std::array<double, 3> base, std::vector<TrigMode> modes);

  static TrigField constant(int n, double c) { return TrigField(n, {c, 0.0, 0.0}, {}); }

  int dimension() const { return n_; }
  double value(const Vector& x, double t) const;

  /// u, u_t, u_tt, Du, Du_t and D^2u at (x, t); A and psi left zero.
  Jet jet(const Vector& x, double t) const;

  /// Samples at every spatial node at time t.
  std::vector<double> sample(const GridSpec& grid, double t) const;

  /// Samples on every node of the grid, boundary levels included.
  SpacetimeField sample(const GridSpec& grid) const;

 private:
  int n_ = 0;
  std::array<double, 3> base_{0.0, 0.0, 0.0};
  std::vector<TrigMode> modes_;
};

/// Exact operator value u_tt sigma_k(W) - sigma_k^{ij}(W) u_ti u_tj of a
/// closed-form field at every node (boundary levels included), for a
/// spatially constant or per-node A.
std::vector<double> manufactured_rhs(const TrigField& u, const Problem& p);

}  // namespace gsge
