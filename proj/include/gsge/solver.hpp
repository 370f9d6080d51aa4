#pragma once

// Damped Newton on the discrete log-residual, admissible initial fields,
// the continuity process in tau, the per-level elliptic solver used to
// initialise gamma > 0 problems, and epsilon-regularisation drivers for the
// degenerate equation.

#include "gsge/grid.hpp"
#include "gsge/linearize.hpp"

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gsge {

struct SolverOptions {
  double newton_tol = 1e-9;  // sup-norm of the log-residual
  int max_newton = 50;
  double damping = 0.5;            // backtracking factor
  double damping_floor = 0x1p-20;  // smallest accepted step scale
  double admissibility_margin = 1e-10;
  double tau_step = 0.1;
  double tau_step_min = 1e-4;
  double tau_step_max = 0.5;
  std::vector<double> epsilon_schedule{1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
  int workers = 1;
  /// Single worker and zeroed wall-clock fields, for reproducible traces.
  bool deterministic = false;
  LinearSolverOptions linear;

  void validate() const;
  int effective_workers() const { return deterministic ? 1 : workers; }
};

struct TraceRecord {
  std::string phase;
  std::optional<double> epsilon;
  double tau = 0.0;
  int iter = 0;
  double residual_sup = 0.0;
  double min_margin = 0.0;
  double step_scale = 0.0;
  double wall_ms = 0.0;
};

struct SolveTrace {
  std::vector<TraceRecord> records;

  void append(const SolveTrace& other) {
    records.insert(records.end(), other.records.begin(), other.records.end());
  }
};

struct SolveResult {
  SpacetimeField field;
  SolveTrace trace;
  bool converged = false;
  int iterations = 0;  // accepted Newton steps (summed over tau steps for homotopy)
  double residual_sup = 0.0;
  std::string failure;
};

class InitializationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Closed-form admissible start: v = (1-t)u0 + t u1 (s = 0) or
/// v = ln((1-t)e^{s u0} + t e^{s u1}) / s, then w = v + a t(t-1) with a
/// doubled from 1 until every interior node is strictly admissible.
SpacetimeField build_initializer(const Problem& p, const SolverOptions& opts);

/// Interpolated field v before the a t(t-1) term (exposed for tests).
SpacetimeField interpolate_boundary(const Problem& p);

/// Adds a t(t-1) with the smallest a = 2^j >= 1 making v strictly admissible.
SpacetimeField convexify(const SpacetimeField& v, const Problem& p, const SolverOptions& opts,
                         double* a_used = nullptr);

struct SliceSolveResult {
  std::vector<double> field;
  bool converged = false;
  int iterations = 0;
  double residual_sup = 0.0;
  SolveTrace trace;
};

/// Newton solve of e^{-2ku} sigma_k(W[u]) = rhs on the torus at one time
/// level. `guess` defaults to (1-t)u0 + t u1.
SliceSolveResult elliptic_slice_solve(const Problem& p, int t_level, std::span<const double> rhs,
                                      const SolverOptions& opts,
                                      std::optional<std::span<const double>> guess = std::nullopt);

/// Right-hand side (1-t) e^{-2k u0} sigma_k(W[u0]) + t e^{-2k u1} sigma_k(W[u1]).
std::vector<double> slice_rhs(const Problem& p, int t_level);

/// gamma > 0 start: level-by-level slice solves, then convexify.
SpacetimeField slice_initializer(const Problem& p, const SolverOptions& opts);

/// build_initializer when r > 0, slice_initializer when gamma > 0, else
/// ParameterError.
SpacetimeField default_initializer(const Problem& p, const SolverOptions& opts);

/// psi restricted to interior nodes.
std::vector<double> interior_psi(const Problem& p);

/// Values u_tt^{1-k} sigma_k(E) at interior nodes, computed exactly as the
/// residual does (so the log-residual against them is zero).
std::vector<double> operator_values(const SpacetimeField& field, const Problem& p, int workers = 1);

/// Damped Newton from a strictly admissible field0. Every accepted step
/// keeps strict admissibility and strictly lowers the residual sup-norm.
SolveResult newton_solve(const SpacetimeField& field0, std::span<const double> rhs, const Problem& p,
                         const SolverOptions& opts, const std::string& phase = "newton",
                         double tau = 1.0, std::optional<double> epsilon = std::nullopt);

/// Continuity process from an admissible `start` to `target`:
/// rhs_tau = (1-tau) F_k(start) + tau target, with adaptive tau steps.
SolveResult homotopy_from(const SpacetimeField& start, std::span<const double> target,
                          const Problem& p, const SolverOptions& opts,
                          std::optional<double> epsilon = std::nullopt);

/// default_initializer followed by homotopy_from to psi (psi > 0 required).
SolveResult homotopy_solve(const Problem& p, const SolverOptions& opts);

enum class RegularizationMode { rhs_epsilon, gamma_epsilon };

std::string_view to_string(RegularizationMode m);

struct DegenerateResult {
  std::vector<double> epsilons;  // solved values, in schedule order
  std::vector<SpacetimeField> fields;
  SpacetimeField extrapolated;   // linear extrapolation to epsilon = 0 (indicative)
  std::vector<double> consecutive_sup_diff;
  std::vector<SupNorms> norms;
  SolveTrace trace;
  /// u^{eps_i} <= u^{eps_{i+1}} + 1e-8 across the schedule (rhs-epsilon only).
  std::optional<bool> monotone;
  double monotonicity_worst = 0.0;  // max(u^{eps_i} - u^{eps_{i+1}})
  /// C0/C1 monitor variation across the last decade <= 2x the first.
  std::optional<bool> monitor_stable;
  bool complete = false;
  std::string failure;
};

/// Problem whose regularised equation is solved for one epsilon:
/// rhs-epsilon keeps W and uses psi + eps; gamma-epsilon uses W + eps Lap u I
/// (gamma + eps) and psi + eps.
Problem regularized_problem(const Problem& p, RegularizationMode mode, double eps);

DegenerateResult degenerate_solve(const Problem& p, const SolverOptions& opts,
                                  RegularizationMode mode);

}  // namespace gsge
