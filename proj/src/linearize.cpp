#include "gsge/linearize.hpp"

#include "gsge/parallel.hpp"
#include "gsge/symfunc.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <utility>

namespace gsge {

namespace {

struct Entry {
  std::size_t col;
  double value;
};

// Sort by column and merge duplicates.
void compress(std::vector<Entry>& row) {
  std::sort(row.begin(), row.end(), [](const Entry& a, const Entry& b) { return a.col < b.col; });
  std::size_t out = 0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (out > 0 && row[out - 1].col == row[i].col) {
      row[out - 1].value += row[i].value;
    } else {
      row[out++] = row[i];
    }
  }
  row.resize(out);
}

Eigen::SparseMatrix<double, Eigen::RowMajor> from_rows(const std::vector<std::vector<Entry>>& rows,
                                                       std::size_t cols) {
  std::vector<Eigen::Triplet<double>> trip;
  std::size_t nnz = 0;
  for (const auto& r : rows) nnz += r.size();
  trip.reserve(nnz);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (const auto& e : rows[i])
      trip.emplace_back(static_cast<int>(i), static_cast<int>(e.col), e.value);
  Eigen::SparseMatrix<double, Eigen::RowMajor> m(static_cast<Eigen::Index>(rows.size()),
                                                  static_cast<Eigen::Index>(cols));
  m.setFromTriplets(trip.begin(), trip.end());
  m.makeCompressed();
  return m;
}

// Coefficients of v_ij (second order) and v_l (first order) in g_ij M_ij(v).
struct SpatialCoefficients {
  SymMatrix second;
  Vector first;
};

SpatialCoefficients spatial_part(const SymMatrix& g, const Vector& grad_u, const Coefficients& c) {
  const double tr = g.trace();
  SpatialCoefficients out;
  out.second = g;
  out.second.diagonal().array() += c.gamma * tr;
  out.first = 2.0 * c.s * (g * grad_u) - c.r * tr * grad_u;
  return out;
}

// Emits the spatial stencil of sum C_ij v_ij + b_l v_l at (level, x).
template <class Add>
void emit_spatial(const GridSpec& g, int level, std::size_t x, const SpatialCoefficients& sc,
                  Add&& add) {
  const double h = g.h();
  const double invh2 = 1.0 / (h * h);
  const double inv2h = 0.5 / h;
  const double inv4h2 = 0.25 * invh2;
  double center = 0.0;
  for (int i = 0; i < g.n; ++i) {
    const double cii = sc.second(i, i) * invh2;
    center -= 2.0 * cii;
    add(level, g.shift(x, i, 1), cii + sc.first[i] * inv2h);
    add(level, g.shift(x, i, -1), cii - sc.first[i] * inv2h);
    for (int j = i + 1; j < g.n; ++j) {
      const double cij = 2.0 * sc.second(i, j) * inv4h2;
      const std::size_t ip = g.shift(x, i, 1);
      const std::size_t im = g.shift(x, i, -1);
      add(level, g.shift(ip, j, 1), cij);
      add(level, g.shift(ip, j, -1), -cij);
      add(level, g.shift(im, j, 1), -cij);
      add(level, g.shift(im, j, -1), cij);
    }
  }
  add(level, x, center);
}

}  // namespace

GCoefficients g_coefficients(const Jet& jet, const Coefficients& c) {
  const AdmissibilityVerdict v = classify_admissible(jet, c, 0.0);
  if (v.cls != Admissibility::strict) {
    throw DomainError("linearisation requires a strictly admissible jet", v.margin());
  }
  const SymMatrix w = assemble_w(jet, c);
  const SymMatrix e = jet.utt * w - jet.grad_ut * jet.grad_ut.transpose();
  const double sk_e = v.sigma_k_e;
  const SymMatrix grad_e = sigma_grad(e, c.k);
  GCoefficients out;
  out.g_tt = sigma(w, c.k) * std::pow(jet.utt, c.k - 1) / sk_e;
  out.g_t = -(grad_e * jet.grad_ut) / sk_e;
  out.g = (jet.utt / sk_e) * grad_e;
  return out;
}

double ellipticity_form(const Jet& jet, const Coefficients& c, const Vector& xi) {
  const AdmissibilityVerdict v = classify_admissible(jet, c, 0.0);
  if (v.cls != Admissibility::strict) {
    throw DomainError("ellipticity form requires a strictly admissible jet", v.margin());
  }
  const SymMatrix e = assemble_e(jet, c);
  const double utt = jet.utt;
  const double sq = std::sqrt(utt);
  const Vector spatial_xi = xi.tail(c.n);
  const Vector z = jet.grad_ut * (xi[0] / sq) - sq * spatial_xi;
  const double sigma_km1 = c.k >= 1 ? sigma(e, c.k - 1) : 0.0;
  return v.sigma_k_e / utt * xi[0] * xi[0] +
         (c.n - c.k + 1) * sigma_km1 * c.gamma * utt * spatial_xi.squaredNorm() +
         z.dot(sigma_grad(e, c.k) * z);
}

double ellipticity_contraction(const Jet& jet, const Coefficients& c, const Vector& xi) {
  const AdmissibilityVerdict v = classify_admissible(jet, c, 0.0);
  if (v.cls != Admissibility::strict) {
    throw DomainError("ellipticity form requires a strictly admissible jet", v.margin());
  }
  const SymMatrix w = assemble_w(jet, c);
  const SymMatrix e = jet.utt * w - jet.grad_ut * jet.grad_ut.transpose();
  const SymMatrix ge = sigma_grad(e, c.k);
  const double utt = jet.utt;
  const Vector spatial_xi = xi.tail(c.n);
  const double a_tt = (1 - c.k) / utt * v.sigma_k_e + ge.cwiseProduct(w).sum();
  SymMatrix a_ss = ge;
  a_ss.diagonal().array() += (c.n - c.k + 1) * sigma(e, c.k - 1) * c.gamma;
  a_ss *= utt;
  return a_tt * xi[0] * xi[0] - 2.0 * xi[0] * spatial_xi.dot(ge * jet.grad_ut) +
         spatial_xi.dot(a_ss * spatial_xi);
}

Node SparseOperator::node(std::size_t q) const {
  const auto ns = grid.spatial_size();
  return Node{static_cast<int>(q / ns) + 1, q % ns};
}

std::size_t SparseOperator::unknown(Node nd) const {
  return static_cast<std::size_t>(nd.level - 1) * grid.spatial_size() + nd.spatial;
}

ResidualEval evaluate_residual(const SpacetimeField& field, std::span<const double> rhs,
                               const Problem& p, double margin, int workers) {
  const GridSpec& g = field.grid();
  const auto ns = g.spatial_size();
  const auto count = g.interior_size();
  if (rhs.size() != count) throw InputError("rhs size does not match interior unknowns");
  ResidualEval out;
  out.residual.assign(count, 0.0);
  std::vector<double> margins(count, 0.0);
  parallel_for(count, workers, [&](std::size_t q) {
    const Node nd{static_cast<int>(q / ns) + 1, q % ns};
    const Jet jet = jet_at(field, nd, p);
    const AdmissibilityVerdict v = classify_admissible(jet, p.coeffs, margin);
    margins[q] = v.margin();
    if (v.cls == Admissibility::strict && rhs[q] > 0.0) {
      out.residual[q] = std::log(std::pow(jet.utt, 1 - p.coeffs.k) * v.sigma_k_e) - std::log(rhs[q]);
    } else {
      out.residual[q] = std::numeric_limits<double>::quiet_NaN();
    }
  });
  out.min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t q = 0; q < count; ++q) {
    if (margins[q] < out.min_margin) {
      out.min_margin = margins[q];
      out.worst_margin_node = Node{static_cast<int>(q / ns) + 1, q % ns};
    }
    if (std::isnan(out.residual[q])) {
      out.strict = false;
    } else {
      out.sup = std::max(out.sup, std::abs(out.residual[q]));
    }
  }
  if (!out.strict) out.sup = std::numeric_limits<double>::infinity();
  return out;
}

std::vector<double> discrete_operator(const SpacetimeField& field, const Problem& p, int workers) {
  const GridSpec& g = field.grid();
  const auto ns = g.spatial_size();
  std::vector<double> out(g.interior_size(), 0.0);
  parallel_for(out.size(), workers, [&](std::size_t q) {
    const Jet jet = jet_at(field, Node{static_cast<int>(q / ns) + 1, q % ns}, p);
    out[q] = residual_pair(jet, p.coeffs).direct;
  });
  return out;
}

SparseOperator assemble_jacobian(const SpacetimeField& field, const Problem& p, int workers) {
  const GridSpec& g = field.grid();
  const auto ns = g.spatial_size();
  const auto count = g.interior_size();
  std::vector<std::vector<Entry>> rows(count);
  std::vector<double> failed(count, std::numeric_limits<double>::infinity());

  parallel_for(count, workers, [&](std::size_t q) {
    const Node nd{static_cast<int>(q / ns) + 1, q % ns};
    const Jet jet = jet_at(field, nd, p);
    GCoefficients gc;
    try {
      gc = g_coefficients(jet, p.coeffs);
    } catch (const DomainError& e) {
      failed[q] = e.margin();
      return;
    }
    auto& row = rows[q];
    row.reserve(static_cast<std::size_t>(1 + 2 * g.n + 2 * g.n * (g.n - 1) + 2 + 4 * g.n));
    auto add = [&](int level, std::size_t x, double value) {
      if (level < 1 || level > g.nt || value == 0.0) return;
      row.push_back(Entry{static_cast<std::size_t>(level - 1) * ns + x, value});
    };
    const double dt = g.dt();
    const double invdt2 = 1.0 / (dt * dt);
    add(nd.level + 1, nd.spatial, gc.g_tt * invdt2);
    add(nd.level - 1, nd.spatial, gc.g_tt * invdt2);
    add(nd.level, nd.spatial, -2.0 * gc.g_tt * invdt2);
    const double wt = 2.0 / (4.0 * g.h() * dt);
    for (int i = 0; i < g.n; ++i) {
      const double c = gc.g_t[i] * wt;
      add(nd.level + 1, g.shift(nd.spatial, i, 1), c);
      add(nd.level + 1, g.shift(nd.spatial, i, -1), -c);
      add(nd.level - 1, g.shift(nd.spatial, i, 1), -c);
      add(nd.level - 1, g.shift(nd.spatial, i, -1), c);
    }
    emit_spatial(g, nd.level, nd.spatial, spatial_part(gc.g, jet.grad_u, p.coeffs), add);
    compress(row);
  });

  for (std::size_t q = 0; q < count; ++q) {
    if (std::isfinite(failed[q])) {
      std::size_t worst = q;
      for (std::size_t r = q; r < count; ++r)
        if (failed[r] < failed[worst]) worst = r;
      std::ostringstream msg;
      msg << "Jacobian requested at a non-strict field; worst node (level "
          << worst / ns + 1 << ", spatial " << worst % ns << ") margin " << failed[worst];
      throw DomainError(msg.str(), failed[worst]);
    }
  }
  return SparseOperator{from_rows(rows, count), g};
}

SliceResidual slice_residual(std::span<const double> v, std::span<const double> rhs,
                             const Problem& p, double margin) {
  const auto ns = p.grid.spatial_size();
  if (v.size() != ns || rhs.size() != ns) throw InputError("slice field has wrong size");
  SliceResidual out;
  out.residual.assign(ns, 0.0);
  out.min_margin = std::numeric_limits<double>::infinity();
  const int k = p.coeffs.k;
  for (std::size_t x = 0; x < ns; ++x) {
    const SymMatrix w = assemble_w(spatial_jet(v, p, x), p.coeffs);
    const auto e = sigma_all(w, k);
    double m = std::numeric_limits<double>::infinity();
    for (int j = 1; j <= k; ++j) m = std::min(m, e[static_cast<std::size_t>(j)] / binomial(p.coeffs.n, j));
    out.min_margin = std::min(out.min_margin, m);
    if (m > margin && rhs[x] > 0.0) {
      out.residual[x] = std::log(e[static_cast<std::size_t>(k)]) - 2.0 * k * v[x] - std::log(rhs[x]);
      out.sup = std::max(out.sup, std::abs(out.residual[x]));
    } else {
      out.residual[x] = std::numeric_limits<double>::quiet_NaN();
      out.strict = false;
    }
  }
  if (!out.strict) out.sup = std::numeric_limits<double>::infinity();
  return out;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> assemble_slice_jacobian(std::span<const double> v,
                                                                     const Problem& p) {
  const GridSpec& g = p.grid;
  const auto ns = g.spatial_size();
  std::vector<std::vector<Entry>> rows(ns);
  for (std::size_t x = 0; x < ns; ++x) {
    const Jet jet = spatial_jet(v, p, x);
    const SymMatrix w = assemble_w(jet, p.coeffs);
    const double sk = sigma(w, p.coeffs.k);
    if (!(sk > 0.0)) throw DomainError("slice Jacobian at a node outside Gamma_k", sk);
    const SymMatrix gmat = sigma_grad(w, p.coeffs.k) / sk;
    auto& row = rows[x];
    auto add = [&](int, std::size_t col, double value) {
      if (value != 0.0) row.push_back(Entry{col, value});
    };
    emit_spatial(g, 0, x, spatial_part(gmat, jet.grad_u, p.coeffs), add);
    row.push_back(Entry{x, -2.0 * p.coeffs.k});
    compress(row);
  }
  return from_rows(rows, ns);
}

std::vector<double> solve_linear(const Eigen::SparseMatrix<double, Eigen::RowMajor>& a,
                                 std::span<const double> b, const LinearSolverOptions& opts,
                                 LinearSolveInfo* info) {
  const auto n = static_cast<Eigen::Index>(b.size());
  if (a.rows() != n || a.cols() != n) throw InputError("linear system has inconsistent sizes");
  Eigen::Map<const Eigen::VectorXd> rhs(b.data(), n);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  LinearSolveInfo local;
  const double bnorm = rhs.norm();
  auto finish = [&](const char* method) {
    local.method = method;
    local.relative_residual = bnorm > 0.0 ? (rhs - a * x).norm() / bnorm : 0.0;
    local.ok = x.allFinite();
    if (info) *info = local;
    return std::vector<double>(x.data(), x.data() + n);
  };
  if (bnorm == 0.0) return finish("trivial");

  if (static_cast<std::size_t>(n) <= opts.dense_threshold) {
    const Eigen::MatrixXd dense(a);
    x = dense.partialPivLu().solve(rhs);
    return finish("dense-lu");
  }

  Eigen::BiCGSTAB<Eigen::SparseMatrix<double, Eigen::RowMajor>, Eigen::DiagonalPreconditioner<double>>
      krylov;
  krylov.setTolerance(opts.krylov_tol);
  krylov.setMaxIterations(opts.krylov_max_iterations);
  krylov.compute(a);
  x = krylov.solve(rhs);
  local.iterations = static_cast<int>(krylov.iterations());
  const double rel = (rhs - a * x).norm() / bnorm;
  if (krylov.info() == Eigen::Success && x.allFinite() && rel <= 1e3 * opts.krylov_tol) {
    return finish("bicgstab");
  }

  Eigen::SparseMatrix<double, Eigen::ColMajor> col(a);
  Eigen::SparseLU<Eigen::SparseMatrix<double, Eigen::ColMajor>> lu;
  lu.analyzePattern(col);
  lu.factorize(col);
  if (lu.info() != Eigen::Success) {
    x.setConstant(std::numeric_limits<double>::quiet_NaN());
    return finish("sparse-lu");
  }
  x = lu.solve(rhs);
  return finish("sparse-lu");
}

void write_coordinate_text(const SparseOperator& op, std::ostream& out) {
  const auto old = out.precision(17);
  for (Eigen::Index r = 0; r < op.matrix.outerSize(); ++r) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(op.matrix, r); it; ++it) {
      out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    }
  }
  out.precision(old);
}

}  // namespace gsge
