#pragma once

// Numerical certification: sampled algebraic properties of the operator,
// a priori estimate monitors on solver output, viscosity spot-checks and
// the delta-approximation used by the uniqueness argument.

#include "gsge/conformal.hpp"
#include "gsge/grid.hpp"
#include "gsge/types.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace gsge {

struct CheckResult {
  std::string name;
  bool passed = true;
  /// Enforced checks decide VerificationReport::passed(); the others are
  /// informational records (sup-norms, gated comparisons).
  bool enforced = true;
  double worst_margin = 0.0;  // smallest slack seen; negative means violated
  std::size_t samples = 0;
  std::size_t violations = 0;
  std::string detail;
};

struct VerificationReport {
  std::vector<CheckResult> checks;

  bool passed() const;
  const CheckResult* find(std::string_view name) const;
  void merge(const VerificationReport& other);
  /// One line per check, fixed field order, %.17g numbers.
  std::string to_text() const;
};

/// Generator for one check: seeded from (seed, check name) so checks do not
/// share streams and reorderings do not change results.
std::mt19937_64 check_stream(std::uint64_t seed, std::string_view check);

struct ConePropagationOptions {
  int max_n = 5;
  /// Negative control: when false, jets with sigma_k(E) <= 0 are not
  /// filtered out and the check is expected to fail.
  bool filter_sigma_e = true;
};

/// lambda(W) in Gamma_k, u_tt > 0, sigma_k(E) > 0 imply lambda(E) in Gamma_k.
VerificationReport check_cone_propagation(std::uint64_t seed, std::size_t samples,
                                          const ConePropagationOptions& opts = {});

/// (n+1)x(n+1) augmented matrix R is in S iff r_00 > 0, lambda(r) in
/// Gamma_k and F_k(R) > 0.
bool in_cone_s(const AugmentedMatrix& r, int k);

/// Closure of S with tolerance: r_00 >= -tol, sigma_j(r) >= -tol for j <= k,
/// F_k(R) >= -tol.
bool in_cone_s_closure(const AugmentedMatrix& r, int k, double tol);

struct ConcavityOptions {
  int max_n = 5;
  /// Exponent p of the homogeneous functional F_k^p; defaults to 1/(k+1).
  /// Negative control: p = 2 is not concave and the check must fail.
  std::optional<double> exponent;
};

/// Midpoint concavity of ln F_k and F_k^p on sampled pairs in S, and
/// midpoint closure of S. Every tenth pair is a scaling pair (R, 2R).
VerificationReport check_concavity(std::uint64_t seed, std::size_t samples,
                                   const ConcavityOptions& opts = {});

/// u <= (1-t) u0 + t u1 + 1e-8 and discrete u_tt >= -1e-8 at interior nodes.
VerificationReport check_maximum_principle(const SpacetimeField& u, const Problem& p);

/// |Du_t|^2 - u_tt tr W[u] at a jet; <= 0 when lambda(E) is in Gamma_1.
double trace_inequality_excess(const Jet& jet, const Coefficients& c);

/// The six sup-norms (informational) and the pointwise trace inequality
/// |Du_t|^2 <= u_tt tr W + 1e-8 (enforced).
VerificationReport monitor_estimates(const SpacetimeField& u, const Problem& p);

struct ViscosityOptions {
  std::size_t trials = 1000;
  double tol = 1e-6;
  /// Test-function curvature bound, in units of the local jet scale.
  double curvature_bound = 10.0;
};

/// Branch outcomes of the viscosity inequalities for a test-function jet.
struct ViscosityBranches {
  bool super_ok = false;  // R not in closure(S), or F_k <= psi + tol
  bool sub_ok = false;    // F_k >= psi - tol
  double f = 0.0;
};

ViscosityBranches viscosity_branches(const Jet& phi, const Coefficients& c, double psi, double tol);

/// Randomised spot-check of the viscosity super/subsolution inequalities
/// with quadratic test functions touching u over the stencil neighbourhood.
/// This samples test functions; it does not certify.
VerificationReport viscosity_spot_check(const SpacetimeField& u, const Problem& p,
                                        std::uint64_t seed, const ViscosityOptions& opts = {});

/// Operator value u_tt sigma_k(W) - sigma_k^{ij}(W) u_ti u_tj at every
/// interior node (direct form), stacked like the solver unknowns.
std::vector<double> nodal_operator(const SpacetimeField& u, const Problem& p);

struct UniquenessApproximation {
  SpacetimeField field;
  double theta = 0.0;
  double omega = 0.0;  // smoothing weight that was kept
  double min_f = 0.0;
  double max_f = 0.0;
  double distance = 0.0;
  bool ok = false;
  VerificationReport report;
};

/// u_delta = (1-theta) u + theta t(t-1), theta the largest value in (0,1)
/// found by bisection with F_k(u_delta) <= delta and |u - u_delta| <= delta,
/// then one local-averaging pass with the largest weight in {1/2, 1/4, ...}
/// that keeps 0 < F_k <= delta and the distance bound.
UniquenessApproximation uniqueness_approximation(const SpacetimeField& u, const Problem& p,
                                                 double delta);

/// Builds approximants of two degenerate solutions (second delta = min
/// nodal F_k of the first) and checks the comparison chain:
/// max(v1 - v2) <= boundary max and |u1 - u2| <= 2 delta + tol. Outside
/// the uniqueness regime the checks are reported but not enforced.
VerificationReport comparison_uniqueness_test(const SpacetimeField& u1, const SpacetimeField& u2,
                                              const Problem& p, double delta, double tol = 1e-6);

}  // namespace gsge
