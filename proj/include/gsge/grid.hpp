#pragma once

// Discretisation of T^n x [0,1]: a uniform periodic lattice on the unit
// torus crossed with a uniform time axis whose end levels carry Dirichlet
// data. Derivatives use second-order central differences.

#include "gsge/conformal.hpp"
#include "gsge/types.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace gsge {

struct GridSpec {
  int n = 2;
  int nx = 16;  // points per spatial axis, h = 1/nx
  int nt = 7;   // interior time levels, dt = 1/(nt+1)

  /// Throws ParameterError unless nx >= 4, nt >= 1 and 1 <= n <= kMaxDim.
  void validate() const;

  std::size_t spatial_size() const;
  std::size_t levels() const { return static_cast<std::size_t>(nt) + 2; }
  std::size_t total_size() const { return levels() * spatial_size(); }
  std::size_t interior_size() const { return static_cast<std::size_t>(nt) * spatial_size(); }
  double h() const { return 1.0 / nx; }
  double dt() const { return 1.0 / (nt + 1); }
  double time(int level) const { return level * dt(); }

  /// Stride of spatial axis `axis` in the lexicographic index (axis 0 slowest).
  std::size_t stride(int axis) const;
  int coordinate(std::size_t spatial, int axis) const;
  /// Periodic neighbour of `spatial` shifted by `offset` points along `axis`.
  std::size_t shift(std::size_t spatial, int axis, int offset) const;
  /// Position of a spatial node on the unit torus.
  Vector position(std::size_t spatial) const;

  bool operator==(const GridSpec&) const = default;
};

struct Node {
  int level = 0;
  std::size_t spatial = 0;
};

/// Scalar values on every node, time-major then lexicographic space. Levels
/// 0 and nt+1 hold the boundary data.
class SpacetimeField {
 public:
  SpacetimeField() = default;
  explicit SpacetimeField(const GridSpec& grid, double fill = 0.0)
      : grid_(grid), values_(grid.total_size(), fill) {}
  SpacetimeField(const GridSpec& grid, std::vector<double> values);

  const GridSpec& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  double operator()(int level, std::size_t spatial) const {
    return values_[static_cast<std::size_t>(level) * grid_.spatial_size() + spatial];
  }
  double& operator()(int level, std::size_t spatial) {
    return values_[static_cast<std::size_t>(level) * grid_.spatial_size() + spatial];
  }

  std::span<const double> slice(int level) const;
  std::span<double> slice(int level);

  /// Interior levels 1..nt flattened (the solver unknowns).
  std::vector<double> interior() const;
  void set_interior(std::span<const double> v);

  bool operator==(const SpacetimeField&) const = default;

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

/// Everything that defines one boundary-value problem on the grid.
struct Problem {
  Coefficients coeffs;
  GridSpec grid;
  std::vector<SymMatrix> a_field;  // one per spatial node
  std::vector<double> psi;         // one per spacetime node, all levels
  std::vector<double> u0;          // spatial
  std::vector<double> u1;          // spatial

  /// Problem with A = c I, psi = const, u0 = u1 = 0.
  static Problem constant(const Coefficients& coeffs, const GridSpec& grid, double a_diag,
                          double psi);

  /// Checks sizes, gamma >= 0, psi >= 0, lambda(A) in Gamma_k and
  /// lambda(W[u0]), lambda(W[u1]) in Gamma_k at every node. Throws
  /// InputError naming the offending field and node.
  void validate() const;

  double psi_at(Node node) const {
    return psi[static_cast<std::size_t>(node.level) * grid.spatial_size() + node.spatial];
  }

  /// Field with u0 / u1 on the boundary levels and `fill` elsewhere.
  SpacetimeField boundary_field(double fill = 0.0) const;
};

/// First and second spatial difference quotients of a periodic spatial
/// field at one node.
struct SpatialDerivatives {
  Vector grad;
  SymMatrix hess;
};

SpatialDerivatives spatial_derivatives(std::span<const double> field, const GridSpec& grid,
                                       std::size_t spatial);

/// Jet of a spatial field: u, grad, hess, A at the node; time parts zero.
Jet spatial_jet(std::span<const double> field, const Problem& p, std::size_t spatial);

/// Full spacetime jet by central differences. Throws DomainError at a
/// boundary time level.
Jet jet_at(const SpacetimeField& field, Node node, const Problem& p);

struct SupNorms {
  double u = 0.0;
  double ut = 0.0;
  double grad_u = 0.0;
  double utt_max = 0.0;
  double hess_u = 0.0;  // Frobenius norm
  double grad_ut = 0.0;
};

/// Maxima of the discrete derivative magnitudes over interior nodes.
SupNorms sup_norms(const SpacetimeField& field, const Problem& p);

/// max |a - b| over all nodes.
double sup_distance(const SpacetimeField& a, const SpacetimeField& b);

}  // namespace gsge
