#pragma once

// Problems shared by several test files.

#include "gsge/analytic.hpp"
#include "gsge/grid.hpp"

#include <numbers>

namespace fixture {

using namespace gsge;

/// u* = t^2/2 + (0.05 + 0.025 t) cos(2 pi x) cos(2 pi y): strictly
/// admissible for n = 2, k = 2, gamma = 0.1, s = r = 1, A = 6 I.
inline TrigField manufactured_field() {
  TrigMode m;
  m.amplitude = {0.05, 0.025, 0.0};
  m.frequency = {1, 1};
  return TrigField(2, {0.0, 0.0, 0.5}, {m});
}

inline Coefficients manufactured_coeffs() { return Coefficients{2, 2, 0.1, 1.0, 1.0}; }

/// Problem whose exact solution is manufactured_field(): boundary data are
/// u* at t = 0, 1 and psi is the exact operator value of u*.
inline Problem manufactured_problem(int nx, int nt) {
  const GridSpec g{2, nx, nt};
  const TrigField u = manufactured_field();
  Problem p = Problem::constant(manufactured_coeffs(), g, 6.0, 1.0);
  p.u0 = u.sample(g, 0.0);
  p.u1 = u.sample(g, 1.0);
  p.psi = manufactured_rhs(u, p);
  p.validate();
  return p;
}

/// Constant boundary data c on both ends, psi = 0, schouten coefficients
/// (s = r = 1, gamma = 0), k = 1, A = I.
inline Problem constant_geodesic_problem(int nx, int nt, double c = 0.3) {
  const GridSpec g{2, nx, nt};
  Problem p = Problem::constant(Coefficients{2, 1, 0.0, 1.0, 1.0}, g, 1.0, 0.0);
  p.u0.assign(g.spatial_size(), c);
  p.u1.assign(g.spatial_size(), c);
  p.validate();
  return p;
}

}  // namespace fixture
