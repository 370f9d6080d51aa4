#include "gsge/solver.hpp"
#include "gsge/symfunc.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace gsge;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double sup_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

bool same_values(const SpacetimeField& a, const SpacetimeField& b) {
  return std::ranges::equal(a.values(), b.values());
}

bool boundary_equal(const SpacetimeField& f, const Problem& p) {
  const int last = p.grid.nt + 1;
  for (std::size_t x = 0; x < p.grid.spatial_size(); ++x) {
    if (f(0, x) != p.u0[x] || f(last, x) != p.u1[x]) return false;
  }
  return true;
}

/// e^{-2k v} sigma_k(W[v]) of a spatial field, independent of the solver.
std::vector<double> slice_operator(std::span<const double> v, const Problem& p) {
  std::vector<double> out(v.size());
  for (std::size_t x = 0; x < v.size(); ++x) {
    const Jet j = spatial_jet(v, p, x);
    out[x] = std::exp(-2.0 * p.coeffs.k * v[x]) * sigma(assemble_w(j, p.coeffs), p.coeffs.k);
  }
  return out;
}

}  // namespace

TEST(Options, Validation) {
  SolverOptions o;
  EXPECT_NO_THROW(o.validate());
  o.damping_floor = 1.5;
  EXPECT_THROW(o.validate(), ParameterError);
  o = SolverOptions{};
  o.newton_tol = 0.0;
  EXPECT_THROW(o.validate(), ParameterError);
  o = SolverOptions{};
  o.epsilon_schedule = {1e-2, 1e-1};
  EXPECT_THROW(o.validate(), ParameterError);
}

TEST(Initializer, ConstantDataFlatCoefficients) {
  const GridSpec g{2, 8, 3};
  Problem p = Problem::constant(Coefficients{2, 1, 0.0, 0.0, 1.0}, g, 1.0, 1.0);
  p.u0.assign(g.spatial_size(), 0.4);
  p.u1.assign(g.spatial_size(), 0.4);
  const SpacetimeField v = interpolate_boundary(p);
  for (double x : v.values()) EXPECT_EQ(x, 0.4);
  double a = 0.0;
  const SpacetimeField w = convexify(v, p, SolverOptions{}, &a);
  EXPECT_GE(a, 1.0);
  for (int m = 1; m <= g.nt; ++m) {
    const Jet j = jet_at(w, {m, 3}, p);
    EXPECT_NEAR(j.utt, 2.0 * a, 1e-12);
    const double t = g.time(m);
    EXPECT_NEAR(w(m, 3), 0.4 + a * t * (t - 1.0), 1e-15);
  }
}

TEST(Initializer, EndpointsReproduceBoundaryData) {
  const Problem base = fixture::manufactured_problem(8, 3);
  for (double s : {0.0, 1.0, -0.5}) {
    Problem p = base;
    p.coeffs.s = s;
    const SpacetimeField v = interpolate_boundary(p);
    EXPECT_TRUE(boundary_equal(v, p)) << "s = " << s;
  }
}

TEST(Initializer, ExponentialBranchOfZeroDataIsZero) {
  const GridSpec g{2, 8, 3};
  const Problem p = Problem::constant(Coefficients{2, 1, 0.0, 1.0, 1.0}, g, 1.0, 1.0);
  for (double x : interpolate_boundary(p).values()) EXPECT_EQ(x, 0.0);
}

TEST(Initializer, ExponentialBranchFormula) {
  const Problem p = fixture::manufactured_problem(8, 3);
  const SpacetimeField v = interpolate_boundary(p);
  const double t = p.grid.time(2);
  const std::size_t x = 9;
  const double expected =
      std::log((1.0 - t) * std::exp(p.u0[x]) + t * std::exp(p.u1[x]));
  EXPECT_NEAR(v(2, x), expected, 1e-15);
}

TEST(Initializer, BuildIsStrictlyAdmissible) {
  const Problem p = fixture::manufactured_problem(8, 3);
  const SolverOptions opts;
  const SpacetimeField w = build_initializer(p, opts);
  EXPECT_TRUE(boundary_equal(w, p));
  const ResidualEval ev = evaluate_residual(w, interior_psi(p), p, opts.admissibility_margin);
  EXPECT_TRUE(ev.strict);
}

TEST(Initializer, OutsideEveryRegimeIsRefused) {
  const GridSpec g{2, 8, 3};
  const Problem p = Problem::constant(Coefficients{2, 1, 0.0, 1.0, 0.0}, g, 1.0, 1.0);
  EXPECT_THROW(default_initializer(p, SolverOptions{}), ParameterError);
}

TEST(Initializer, ConvexifyReportsNodeWhenWOutsideCone) {
  const GridSpec g{2, 8, 3};
  const Problem p = Problem::constant(Coefficients{2, 2, 0.0, 0.0, 1.0}, g, 1.0, 1.0);
  SpacetimeField v(g);
  v(2, 5) = -5.0;  // W has a large negative eigenvalue at this node
  try {
    convexify(v, p, SolverOptions{});
    FAIL();
  } catch (const InitializationFailure& e) {
    EXPECT_NE(std::string(e.what()).find("level"), std::string::npos) << e.what();
  }
}

TEST(Slice, ConstantSolution) {
  const GridSpec g{2, 8, 3};
  const Coefficients c{2, 2, 0.2, 1.0, 1.0};
  const Problem p = Problem::constant(c, g, 2.0, 1.0);
  const double sigma_a = sigma(SymMatrix(2.0 * SymMatrix::Identity(2, 2)), 2);
  const double u_star = 0.2;
  const std::vector<double> rhs(g.spatial_size(), std::exp(-4.0 * u_star) * sigma_a);
  const SliceSolveResult r = elliptic_slice_solve(p, 1, rhs, SolverOptions{});
  ASSERT_TRUE(r.converged);
  for (double v : r.field) EXPECT_NEAR(v, u_star, 1e-10);

  const double delta = 0.05;
  std::vector<double> shifted(rhs);
  for (auto& v : shifted) v *= std::exp(-4.0 * delta);
  const SliceSolveResult s = elliptic_slice_solve(p, 1, shifted, SolverOptions{});
  ASSERT_TRUE(s.converged);
  for (std::size_t x = 0; x < s.field.size(); ++x) EXPECT_NEAR(s.field[x], r.field[x] + delta, 1e-10);
}

TEST(Slice, EndpointsReproduceBoundaryData) {
  const Problem p = fixture::manufactured_problem(8, 3);
  const SolverOptions opts;
  const SliceSolveResult a = elliptic_slice_solve(p, 0, slice_rhs(p, 0), opts);
  ASSERT_TRUE(a.converged);
  for (std::size_t x = 0; x < a.field.size(); ++x) EXPECT_NEAR(a.field[x], p.u0[x], 1e-12);
  const SliceSolveResult b = elliptic_slice_solve(p, p.grid.nt + 1, slice_rhs(p, p.grid.nt + 1), opts);
  ASSERT_TRUE(b.converged);
  for (std::size_t x = 0; x < b.field.size(); ++x) EXPECT_NEAR(b.field[x], p.u1[x], 1e-12);
}

TEST(Slice, RecoversManufacturedSpatialField) {
  const Problem p = fixture::manufactured_problem(12, 3);
  std::vector<double> u_star(p.grid.spatial_size());
  for (std::size_t x = 0; x < u_star.size(); ++x) {
    const Vector y = p.grid.position(x);
    u_star[x] = 0.1 + 0.04 * std::sin(kTwoPi * y(0)) * std::cos(kTwoPi * y(1)) +
                0.02 * std::cos(2 * kTwoPi * y(1));
  }
  const auto rhs = slice_operator(u_star, p);
  const SliceSolveResult r = elliptic_slice_solve(p, 2, rhs, SolverOptions{});
  ASSERT_TRUE(r.converged);
  double err = 0.0;
  for (std::size_t x = 0; x < u_star.size(); ++x) err = std::max(err, std::abs(r.field[x] - u_star[x]));
  EXPECT_LE(err, 1e-8);
}

TEST(Slice, InitializerStacksSolvedLevels) {
  const Problem p = fixture::manufactured_problem(8, 3);
  const SolverOptions opts;
  const SpacetimeField w = slice_initializer(p, opts);
  EXPECT_TRUE(boundary_equal(w, p));
  EXPECT_TRUE(evaluate_residual(w, interior_psi(p), p, opts.admissibility_margin).strict);
}

TEST(Newton, AlreadySolvedFieldIsUnchanged) {
  const Problem p = fixture::manufactured_problem(8, 3);
  const SpacetimeField u = fixture::manufactured_field().sample(p.grid);
  const SolveResult r = newton_solve(u, operator_values(u, p), p, SolverOptions{});
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_TRUE(same_values(r.field, u));
}

TEST(Newton, BasinAndInvariants) {
  const Problem p = fixture::manufactured_problem(16, 7);
  const SolverOptions opts;
  const SpacetimeField u = fixture::manufactured_field().sample(p.grid);
  SpacetimeField perturbed = u;
  for (int m = 1; m <= p.grid.nt; ++m) {
    const double t = p.grid.time(m);
    for (std::size_t x = 0; x < p.grid.spatial_size(); ++x) {
      perturbed(m, x) += 0.01 * t * (1.0 - t) * std::cos(kTwoPi * p.grid.position(x)(0));
    }
  }
  const auto psi = interior_psi(p);
  const SolveResult a = newton_solve(u, psi, p, opts);
  const SolveResult b = newton_solve(perturbed, psi, p, opts);
  ASSERT_TRUE(a.converged);
  ASSERT_TRUE(b.converged);
  EXPECT_LE(sup_distance(a.field, b.field), 1e-8);
  EXPECT_LE(a.residual_sup, opts.newton_tol);
  EXPECT_TRUE(boundary_equal(b.field, p));
  for (std::size_t i = 1; i < b.trace.records.size(); ++i) {
    EXPECT_LT(b.trace.records[i].residual_sup, b.trace.records[i - 1].residual_sup);
    EXPECT_GE(b.trace.records[i].min_margin, opts.admissibility_margin);
  }
}

TEST(Newton, InadmissibleStartFails) {
  const Problem p = fixture::manufactured_problem(8, 3);
  SpacetimeField u = fixture::manufactured_field().sample(p.grid);
  u(1, 0) += 1.0;
  const SolveResult r = newton_solve(u, interior_psi(p), p, SolverOptions{});
  EXPECT_FALSE(r.converged);
  EXPECT_NE(r.failure.find("not strictly admissible"), std::string::npos);
}

TEST(Newton, MaxIterationsReported) {
  const Problem p = fixture::manufactured_problem(8, 3);
  SolverOptions opts;
  opts.max_newton = 1;
  const SolveResult r = newton_solve(build_initializer(p, opts), interior_psi(p), p, opts);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.failure, "max_newton exceeded");
}

TEST(Homotopy, EndpointsAndBoundary) {
  const Problem p = fixture::manufactured_problem(8, 3);
  const SolverOptions opts;
  const SolveResult r = homotopy_solve(p, opts);
  ASSERT_TRUE(r.converged) << r.failure;
  EXPECT_LE(r.residual_sup, opts.newton_tol);
  EXPECT_TRUE(boundary_equal(r.field, p));
  ASSERT_FALSE(r.trace.records.empty());
  EXPECT_EQ(r.trace.records.front().tau, 0.0);
  EXPECT_EQ(r.trace.records.front().residual_sup, 0.0);
  EXPECT_EQ(r.trace.records.back().tau, 1.0);
  const ResidualEval ev = evaluate_residual(r.field, interior_psi(p), p, opts.admissibility_margin);
  EXPECT_LE(ev.sup, opts.newton_tol);
}

TEST(Homotopy, TargetEqualToStartNeedsNoIterations) {
  const Problem p = fixture::manufactured_problem(8, 3);
  const SolverOptions opts;
  const SpacetimeField w = build_initializer(p, opts);
  const SolveResult r = homotopy_from(w, operator_values(w, p), p, opts);
  ASSERT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_TRUE(same_values(r.field, w));
}

TEST(Homotopy, NonPositiveTargetRejected) {
  const Problem p = fixture::manufactured_problem(8, 3);
  const SpacetimeField w = build_initializer(p, SolverOptions{});
  std::vector<double> target(p.grid.interior_size(), 1.0);
  target[4] = 0.0;
  EXPECT_THROW(homotopy_from(w, target, p, SolverOptions{}), InputError);
}

TEST(Homotopy, DeterministicTraceIsReproducible) {
  const Problem p = fixture::manufactured_problem(8, 3);
  SolverOptions opts;
  opts.deterministic = true;
  opts.workers = 4;
  const SolveResult a = homotopy_solve(p, opts);
  const SolveResult b = homotopy_solve(p, opts);
  EXPECT_TRUE(same_values(a.field, b.field));
  ASSERT_EQ(a.trace.records.size(), b.trace.records.size());
  for (std::size_t i = 0; i < a.trace.records.size(); ++i) {
    EXPECT_EQ(a.trace.records[i].residual_sup, b.trace.records[i].residual_sup);
    EXPECT_EQ(a.trace.records[i].wall_ms, 0.0);
  }
}

TEST(Degenerate, RegularizedProblem) {
  const Problem p = fixture::constant_geodesic_problem(8, 3);
  const Problem a = regularized_problem(p, RegularizationMode::rhs_epsilon, 1e-3);
  EXPECT_EQ(a.coeffs.gamma, 0.0);
  EXPECT_EQ(a.psi[5], 1e-3);
  const Problem b = regularized_problem(p, RegularizationMode::gamma_epsilon, 1e-3);
  EXPECT_EQ(b.coeffs.gamma, 1e-3);
  EXPECT_EQ(to_string(RegularizationMode::gamma_epsilon), "gamma-epsilon");
}

TEST(Degenerate, ConstantGeodesicConvergesToConstantPath) {
  const Problem p = fixture::constant_geodesic_problem(8, 3);
  SolverOptions opts;
  const DegenerateResult r = degenerate_solve(p, opts, RegularizationMode::rhs_epsilon);
  ASSERT_TRUE(r.complete) << r.failure;
  ASSERT_EQ(r.fields.size(), opts.epsilon_schedule.size());
  const SpacetimeField exact(p.grid, 0.3);
  double previous = 1e300;
  for (const auto& f : r.fields) {
    const double err = sup_distance(f, exact);
    EXPECT_LT(err, previous);
    previous = err;
    EXPECT_TRUE(boundary_equal(f, p));
  }
  EXPECT_LE(previous, 1e-6);
  ASSERT_TRUE(r.monotone.has_value());
  EXPECT_TRUE(*r.monotone);
  EXPECT_LE(r.monotonicity_worst, 1e-8);
  EXPECT_EQ(r.consecutive_sup_diff.size(), r.fields.size() - 1);
  EXPECT_LE(sup_distance(r.extrapolated, exact), previous);
}

TEST(Degenerate, GammaModeHasNoMonotonicityRecord) {
  const Problem p = fixture::constant_geodesic_problem(8, 3);
  SolverOptions opts;
  opts.epsilon_schedule = {1e-1, 1e-2};
  const DegenerateResult r = degenerate_solve(p, opts, RegularizationMode::gamma_epsilon);
  ASSERT_TRUE(r.complete) << r.failure;
  EXPECT_FALSE(r.monotone.has_value());
}

TEST(Degenerate, ModePreconditions) {
  Problem p = fixture::constant_geodesic_problem(8, 3);
  p.coeffs.r = 0.0;
  EXPECT_THROW(degenerate_solve(p, SolverOptions{}, RegularizationMode::gamma_epsilon), ParameterError);
  EXPECT_THROW(degenerate_solve(p, SolverOptions{}, RegularizationMode::rhs_epsilon), ParameterError);
}
