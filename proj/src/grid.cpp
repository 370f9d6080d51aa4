#include "gsge/grid.hpp"

#include "gsge/symfunc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace gsge {

void GridSpec::validate() const {
  if (n < 1 || n > kMaxDim) throw ParameterError("grid dimension n out of range");
  if (nx < 4) throw ParameterError("grid nx must be >= 4 (got " + std::to_string(nx) + ")");
  if (nt < 1) throw ParameterError("grid nt must be >= 1 (got " + std::to_string(nt) + ")");
  double total = std::pow(static_cast<double>(nx), n) * (nt + 2);
  if (total > 1.0e8) throw ParameterError("grid too large");
}

std::size_t GridSpec::spatial_size() const {
  std::size_t s = 1;
  for (int d = 0; d < n; ++d) s *= static_cast<std::size_t>(nx);
  return s;
}

std::size_t GridSpec::stride(int axis) const {
  std::size_t s = 1;
  for (int d = axis + 1; d < n; ++d) s *= static_cast<std::size_t>(nx);
  return s;
}

int GridSpec::coordinate(std::size_t spatial, int axis) const {
  return static_cast<int>((spatial / stride(axis)) % static_cast<std::size_t>(nx));
}

std::size_t GridSpec::shift(std::size_t spatial, int axis, int offset) const {
  const int c = coordinate(spatial, axis);
  const int moved = ((c + offset) % nx + nx) % nx;
  const auto st = stride(axis);
  return spatial - static_cast<std::size_t>(c) * st + static_cast<std::size_t>(moved) * st;
}

Vector GridSpec::position(std::size_t spatial) const {
  Vector x(n);
  for (int d = 0; d < n; ++d) x[d] = coordinate(spatial, d) * h();
  return x;
}

SpacetimeField::SpacetimeField(const GridSpec& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.total_size()) throw InputError("field size does not match grid");
}

std::span<const double> SpacetimeField::slice(int level) const {
  const auto ns = grid_.spatial_size();
  return std::span<const double>(values_).subspan(static_cast<std::size_t>(level) * ns, ns);
}

std::span<double> SpacetimeField::slice(int level) {
  const auto ns = grid_.spatial_size();
  return std::span<double>(values_).subspan(static_cast<std::size_t>(level) * ns, ns);
}

std::vector<double> SpacetimeField::interior() const {
  const auto ns = grid_.spatial_size();
  return {values_.begin() + static_cast<std::ptrdiff_t>(ns),
          values_.begin() + static_cast<std::ptrdiff_t>(ns + grid_.interior_size())};
}

void SpacetimeField::set_interior(std::span<const double> v) {
  if (v.size() != grid_.interior_size()) throw InputError("interior vector has wrong size");
  std::copy(v.begin(), v.end(), values_.begin() + static_cast<std::ptrdiff_t>(grid_.spatial_size()));
}

Problem Problem::constant(const Coefficients& coeffs, const GridSpec& grid, double a_diag,
                          double psi_value) {
  Problem p;
  p.coeffs = coeffs;
  p.grid = grid;
  const auto ns = grid.spatial_size();
  p.a_field.assign(ns, a_diag * SymMatrix::Identity(coeffs.n, coeffs.n));
  p.psi.assign(grid.total_size(), psi_value);
  p.u0.assign(ns, 0.0);
  p.u1.assign(ns, 0.0);
  return p;
}

namespace {

void check_cone(const std::vector<double>& field, const Problem& p, const char* name) {
  for (std::size_t i = 0; i < field.size(); ++i) {
    const SymMatrix w = assemble_w(spatial_jet(field, p, i), p.coeffs);
    const double m = cone_margin(w, p.coeffs.k);
    if (!(m > 0.0)) {
      throw InputError(std::string("lambda(W[") + name + "]) not in Gamma_k at spatial node " +
                       std::to_string(i) + " (margin " + std::to_string(m) + ")");
    }
  }
}

}  // namespace

void Problem::validate() const {
  coeffs.validate();
  grid.validate();
  if (grid.n != coeffs.n) throw InputError("grid dimension differs from problem dimension n");
  const auto ns = grid.spatial_size();
  if (a_field.size() != ns) throw InputError("A field has wrong size");
  if (psi.size() != grid.total_size()) throw InputError("psi field has wrong size");
  if (u0.size() != ns) throw InputError("u0 field has wrong size");
  if (u1.size() != ns) throw InputError("u1 field has wrong size");
  for (std::size_t i = 0; i < psi.size(); ++i) {
    if (!std::isfinite(psi[i]) || psi[i] < 0.0) {
      throw InputError("psi must be finite and >= 0 (node " + std::to_string(i) + ")");
    }
  }
  for (std::size_t i = 0; i < ns; ++i) {
    if (!std::isfinite(u0[i])) throw InputError("u0 is not finite at node " + std::to_string(i));
    if (!std::isfinite(u1[i])) throw InputError("u1 is not finite at node " + std::to_string(i));
    const SymMatrix& a = a_field[i];
    if (a.rows() != coeffs.n || a.cols() != coeffs.n) {
      throw InputError("A has wrong dimension at node " + std::to_string(i));
    }
    try {
      check_symmetric(a);
    } catch (const InputError& e) {
      throw InputError("A at node " + std::to_string(i) + ": " + e.what());
    }
    if (!in_gamma_k(a, coeffs.k, 0.0)) {
      throw InputError("lambda(A) not in Gamma_k at spatial node " + std::to_string(i));
    }
  }
  check_cone(u0, *this, "u0");
  check_cone(u1, *this, "u1");
}

SpacetimeField Problem::boundary_field(double fill) const {
  SpacetimeField f(grid, fill);
  auto first = f.slice(0);
  auto last = f.slice(grid.nt + 1);
  std::copy(u0.begin(), u0.end(), first.begin());
  std::copy(u1.begin(), u1.end(), last.begin());
  return f;
}

SpatialDerivatives spatial_derivatives(std::span<const double> field, const GridSpec& grid,
                                       std::size_t spatial) {
  const int n = grid.n;
  const double h = grid.h();
  const double inv2h = 0.5 / h;
  const double invh2 = 1.0 / (h * h);
  const double inv4h2 = 0.25 * invh2;
  SpatialDerivatives d{Vector(n), SymMatrix(n, n)};
  const double c = field[spatial];
  for (int i = 0; i < n; ++i) {
    const double up = field[grid.shift(spatial, i, 1)];
    const double dn = field[grid.shift(spatial, i, -1)];
    d.grad[i] = (up - dn) * inv2h;
    d.hess(i, i) = (up - 2.0 * c + dn) * invh2;
    for (int j = i + 1; j < n; ++j) {
      const std::size_t ip = grid.shift(spatial, i, 1);
      const std::size_t im = grid.shift(spatial, i, -1);
      const double pp = field[grid.shift(ip, j, 1)];
      const double pm = field[grid.shift(ip, j, -1)];
      const double mp = field[grid.shift(im, j, 1)];
      const double mm = field[grid.shift(im, j, -1)];
      const double v = (pp - pm - mp + mm) * inv4h2;
      d.hess(i, j) = v;
      d.hess(j, i) = v;
    }
  }
  return d;
}

Jet spatial_jet(std::span<const double> field, const Problem& p, std::size_t spatial) {
  Jet jet = Jet::zero(p.coeffs.n);
  auto d = spatial_derivatives(field, p.grid, spatial);
  jet.u = field[spatial];
  jet.grad_u = d.grad;
  jet.hess_u = d.hess;
  jet.a_here = p.a_field[spatial];
  return jet;
}

Jet jet_at(const SpacetimeField& field, Node node, const Problem& p) {
  const GridSpec& g = field.grid();
  if (node.level < 1 || node.level > g.nt) {
    throw DomainError("jet requested at boundary time level " + std::to_string(node.level),
                      static_cast<double>(node.level));
  }
  const double dt = g.dt();
  const double h = g.h();
  const auto now = field.slice(node.level);
  const auto next = field.slice(node.level + 1);
  const auto prev = field.slice(node.level - 1);
  const std::size_t x = node.spatial;

  Jet jet;
  auto d = spatial_derivatives(now, g, x);
  jet.u = now[x];
  jet.ut = (next[x] - prev[x]) / (2.0 * dt);
  jet.utt = (next[x] - 2.0 * now[x] + prev[x]) / (dt * dt);
  jet.grad_u = d.grad;
  jet.hess_u = d.hess;
  jet.grad_ut.resize(g.n);
  const double w = 1.0 / (4.0 * h * dt);
  for (int i = 0; i < g.n; ++i) {
    const std::size_t xp = g.shift(x, i, 1);
    const std::size_t xm = g.shift(x, i, -1);
    jet.grad_ut[i] = (next[xp] - next[xm] - prev[xp] + prev[xm]) * w;
  }
  jet.a_here = p.a_field[x];
  jet.psi_here = p.psi_at(node);
  return jet;
}

SupNorms sup_norms(const SpacetimeField& field, const Problem& p) {
  const GridSpec& g = field.grid();
  SupNorms s;
  s.utt_max = -std::numeric_limits<double>::infinity();
  for (int m = 1; m <= g.nt; ++m) {
    for (std::size_t x = 0; x < g.spatial_size(); ++x) {
      const Jet j = jet_at(field, {m, x}, p);
      s.u = std::max(s.u, std::abs(j.u));
      s.ut = std::max(s.ut, std::abs(j.ut));
      s.grad_u = std::max(s.grad_u, j.grad_u.norm());
      s.utt_max = std::max(s.utt_max, j.utt);
      s.hess_u = std::max(s.hess_u, j.hess_u.norm());
      s.grad_ut = std::max(s.grad_ut, j.grad_ut.norm());
    }
  }
  return s;
}

double sup_distance(const SpacetimeField& a, const SpacetimeField& b) {
  if (!(a.grid() == b.grid())) throw InputError("fields live on different grids");
  double d = 0.0;
  const auto va = a.values();
  const auto vb = b.values();
  for (std::size_t i = 0; i < va.size(); ++i) d = std::max(d, std::abs(va[i] - vb[i]));
  return d;
}

}  // namespace gsge
