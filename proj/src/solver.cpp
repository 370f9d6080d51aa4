#include "gsge/solver.hpp"

#include "gsge/parallel.hpp"
#include "gsge/symfunc.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace gsge {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start, const SolverOptions& opts) {
  if (opts.deterministic) return 0.0;
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string node_text(Node nd) {
  return "(level " + std::to_string(nd.level) + ", spatial " + std::to_string(nd.spatial) + ")";
}

}  // namespace

void SolverOptions::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ParameterError(std::string(name) + " must be positive");
  };
  positive(newton_tol, "newton_tol");
  positive(damping, "damping");
  positive(damping_floor, "damping_floor");
  positive(admissibility_margin, "admissibility_margin");
  positive(tau_step, "tau_step");
  positive(tau_step_min, "tau_step_min");
  positive(tau_step_max, "tau_step_max");
  if (max_newton < 1) throw ParameterError("max_newton must be >= 1");
  if (damping >= 1.0) throw ParameterError("damping must be < 1");
  if (damping_floor >= 1.0) throw ParameterError("damping_floor must be < 1");
  if (tau_step_min > tau_step_max) throw ParameterError("tau_step_min exceeds tau_step_max");
  if (epsilon_schedule.empty()) throw ParameterError("epsilon_schedule is empty");
  for (std::size_t i = 0; i < epsilon_schedule.size(); ++i) {
    positive(epsilon_schedule[i], "epsilon_schedule entry");
    if (i > 0 && epsilon_schedule[i] >= epsilon_schedule[i - 1]) {
      throw ParameterError("epsilon_schedule must be strictly decreasing");
    }
  }
  if (workers < 1) throw ParameterError("workers must be >= 1");
}

std::vector<double> interior_psi(const Problem& p) {
  const auto ns = p.grid.spatial_size();
  return {p.psi.begin() + static_cast<std::ptrdiff_t>(ns),
          p.psi.begin() + static_cast<std::ptrdiff_t>(ns + p.grid.interior_size())};
}

std::vector<double> operator_values(const SpacetimeField& field, const Problem& p, int workers) {
  const GridSpec& g = field.grid();
  const auto ns = g.spatial_size();
  std::vector<double> out(g.interior_size(), 0.0);
  parallel_for(out.size(), workers, [&](std::size_t q) {
    const Jet jet = jet_at(field, Node{static_cast<int>(q / ns) + 1, q % ns}, p);
    const ResidualPair rp = residual_pair(jet, p.coeffs);
    out[q] = rp.via_e ? *rp.via_e : rp.direct;
  });
  return out;
}

SpacetimeField interpolate_boundary(const Problem& p) {
  SpacetimeField v = p.boundary_field();
  const GridSpec& g = p.grid;
  const double s = p.coeffs.s;
  for (int m = 1; m <= g.nt; ++m) {
    const double t = g.time(m);
    auto slice = v.slice(m);
    for (std::size_t x = 0; x < g.spatial_size(); ++x) {
      const double a = p.u0[x];
      const double b = p.u1[x];
      if (s == 0.0) {
        slice[x] = (1.0 - t) * a + t * b;
      } else {
        // ln((1-t) e^{s a} + t e^{s b}) / s, shifted by the larger exponent.
        const double top = std::max(s * a, s * b);
        const double mix = (1.0 - t) * std::exp(s * a - top) + t * std::exp(s * b - top);
        slice[x] = (top + std::log(mix)) / s;
      }
    }
  }
  return v;
}

SpacetimeField convexify(const SpacetimeField& v, const Problem& p, const SolverOptions& opts,
                         double* a_used) {
  const GridSpec& g = p.grid;
  const auto ns = g.spatial_size();
  // W does not see a t(t-1); its cone membership must already hold.
  double worst = std::numeric_limits<double>::infinity();
  Node worst_node;
  for (int m = 1; m <= g.nt; ++m) {
    for (std::size_t x = 0; x < ns; ++x) {
      const Jet jet = jet_at(v, {m, x}, p);
      const double cm = cone_margin(assemble_w(jet, p.coeffs), p.coeffs.k);
      if (cm < worst) {
        worst = cm;
        worst_node = {m, x};
      }
    }
  }
  if (!(worst > opts.admissibility_margin)) {
    std::ostringstream msg;
    msg << "initial field has lambda(W) outside Gamma_k at node " << node_text(worst_node)
        << " (cone margin " << worst << ")";
    throw InitializationFailure(msg.str());
  }
  const double a_max = std::ldexp(1.0, 64);
  for (double a = 1.0; a <= a_max; a *= 2.0) {
    SpacetimeField w = v;
    for (int m = 1; m <= g.nt; ++m) {
      const double t = g.time(m);
      for (auto& value : w.slice(m)) value += a * t * (t - 1.0);
    }
    const ResidualEval ev =
        evaluate_residual(w, std::vector<double>(g.interior_size(), 1.0), p, opts.admissibility_margin,
                          opts.effective_workers());
    if (ev.strict) {
      if (a_used) *a_used = a;
      return w;
    }
    if (a * 2.0 > a_max) {
      std::ostringstream msg;
      msg << "no convexification constant a <= 2^64 makes the initial field admissible; worst node "
          << node_text(ev.worst_margin_node) << " margin " << ev.min_margin;
      throw InitializationFailure(msg.str());
    }
  }
  throw InitializationFailure("convexification failed");
}

SpacetimeField build_initializer(const Problem& p, const SolverOptions& opts) {
  return convexify(interpolate_boundary(p), p, opts);
}

std::vector<double> slice_rhs(const Problem& p, int t_level) {
  const auto ns = p.grid.spatial_size();
  const double t = p.grid.time(t_level);
  const int k = p.coeffs.k;
  std::vector<double> rhs(ns);
  for (std::size_t x = 0; x < ns; ++x) {
    const double f0 = std::exp(-2.0 * k * p.u0[x]) * sigma(assemble_w(spatial_jet(p.u0, p, x), p.coeffs), k);
    const double f1 = std::exp(-2.0 * k * p.u1[x]) * sigma(assemble_w(spatial_jet(p.u1, p, x), p.coeffs), k);
    rhs[x] = (1.0 - t) * f0 + t * f1;
  }
  return rhs;
}

SliceSolveResult elliptic_slice_solve(const Problem& p, int t_level, std::span<const double> rhs,
                                      const SolverOptions& opts,
                                      std::optional<std::span<const double>> guess) {
  if (!(p.coeffs.gamma > 0.0)) throw ParameterError("slice solve requires gamma > 0");
  const auto ns = p.grid.spatial_size();
  if (rhs.size() != ns) throw InputError("slice rhs has wrong size");
  for (double v : rhs) {
    if (!(v > 0.0)) throw InputError("slice rhs must be positive");
  }
  const auto start = Clock::now();
  const double t = p.grid.time(t_level);

  std::vector<std::vector<double>> candidates;
  if (guess) candidates.emplace_back(guess->begin(), guess->end());
  {
    std::vector<double> lin(ns);
    for (std::size_t x = 0; x < ns; ++x) lin[x] = (1.0 - t) * p.u0[x] + t * p.u1[x];
    candidates.push_back(std::move(lin));
  }
  candidates.push_back(p.u0);
  candidates.push_back(p.u1);

  SliceSolveResult out;
  SliceResidual ev;
  bool have_start = false;
  for (auto& c : candidates) {
    if (c.size() != ns) throw InputError("slice guess has wrong size");
    ev = slice_residual(c, rhs, p, opts.admissibility_margin);
    if (ev.strict) {
      out.field = std::move(c);
      have_start = true;
      break;
    }
  }
  if (!have_start) return out;

  auto record = [&](int iter, double scale) {
    out.trace.records.push_back(TraceRecord{"slice", std::nullopt, t, iter, ev.sup, ev.min_margin,
                                            scale, elapsed_ms(start, opts)});
  };
  record(0, 0.0);
  for (int it = 1; it <= opts.max_newton; ++it) {
    if (ev.sup <= opts.newton_tol) break;
    const auto jac = assemble_slice_jacobian(out.field, p);
    std::vector<double> neg(ns);
    for (std::size_t x = 0; x < ns; ++x) neg[x] = -ev.residual[x];
    const auto delta = solve_linear(jac, neg, opts.linear);
    double scale = 1.0;
    bool accepted = false;
    while (scale >= opts.damping_floor) {
      std::vector<double> trial(ns);
      for (std::size_t x = 0; x < ns; ++x) trial[x] = out.field[x] + scale * delta[x];
      SliceResidual tr = slice_residual(trial, rhs, p, opts.admissibility_margin);
      if (tr.strict && tr.sup < ev.sup) {
        out.field = std::move(trial);
        ev = std::move(tr);
        accepted = true;
        break;
      }
      scale *= opts.damping;
    }
    if (!accepted) break;
    out.iterations = it;
    record(it, scale);
  }
  out.residual_sup = ev.sup;
  out.converged = ev.sup <= opts.newton_tol;
  return out;
}

SpacetimeField slice_initializer(const Problem& p, const SolverOptions& opts) {
  if (!(p.coeffs.gamma > 0.0)) throw ParameterError("slice initializer requires gamma > 0");
  SpacetimeField v = p.boundary_field();
  std::vector<double> guess = p.u0;
  for (int m = 1; m <= p.grid.nt; ++m) {
    const auto rhs = slice_rhs(p, m);
    const SliceSolveResult r = elliptic_slice_solve(p, m, rhs, opts, std::span<const double>(guess));
    if (!r.converged) {
      throw InitializationFailure("slice solve failed at time level " + std::to_string(m) +
                                  " (residual " + std::to_string(r.residual_sup) + ")");
    }
    std::copy(r.field.begin(), r.field.end(), v.slice(m).begin());
    guess = r.field;
  }
  return convexify(v, p, opts);
}

SpacetimeField default_initializer(const Problem& p, const SolverOptions& opts) {
  if (p.coeffs.r > 0.0) return build_initializer(p, opts);
  if (p.coeffs.gamma > 0.0) return slice_initializer(p, opts);
  throw ParameterError("no admissible initializer: need r > 0 or gamma > 0");
}

SolveResult newton_solve(const SpacetimeField& field0, std::span<const double> rhs, const Problem& p,
                         const SolverOptions& opts, const std::string& phase, double tau,
                         std::optional<double> epsilon) {
  const auto start = Clock::now();
  const int workers = opts.effective_workers();
  SolveResult out;
  out.field = field0;
  ResidualEval ev = evaluate_residual(out.field, rhs, p, opts.admissibility_margin, workers);
  auto record = [&](int iter, double scale) {
    out.trace.records.push_back(TraceRecord{phase, epsilon, tau, iter, ev.sup, ev.min_margin, scale,
                                            elapsed_ms(start, opts)});
  };
  if (!ev.strict) {
    out.failure = "start field not strictly admissible at node " + node_text(ev.worst_margin_node) +
                  " (margin " + std::to_string(ev.min_margin) + ")";
    out.residual_sup = ev.sup;
    record(0, 0.0);
    return out;
  }
  record(0, 0.0);
  const auto count = field0.grid().interior_size();
  for (int it = 1; ev.sup > opts.newton_tol; ++it) {
    if (it > opts.max_newton) {
      out.failure = "max_newton exceeded";
      break;
    }
    const SparseOperator jac = assemble_jacobian(out.field, p, workers);
    std::vector<double> neg(count);
    for (std::size_t q = 0; q < count; ++q) neg[q] = -ev.residual[q];
    LinearSolveInfo info;
    const auto delta = solve_linear(jac.matrix, neg, opts.linear, &info);
    if (!info.ok) {
      out.failure = "linear solve failed (" + info.method + ")";
      break;
    }
    const auto base = out.field.interior();
    double scale = 1.0;
    bool accepted = false;
    while (scale >= opts.damping_floor) {
      std::vector<double> trial(count);
      for (std::size_t q = 0; q < count; ++q) trial[q] = base[q] + scale * delta[q];
      SpacetimeField candidate = out.field;
      candidate.set_interior(trial);
      ResidualEval tr = evaluate_residual(candidate, rhs, p, opts.admissibility_margin, workers);
      if (tr.strict && tr.sup < ev.sup) {
        out.field = std::move(candidate);
        ev = std::move(tr);
        accepted = true;
        break;
      }
      scale *= opts.damping;
    }
    if (!accepted) {
      out.failure = "damping floor reached";
      break;
    }
    out.iterations = it;
    record(it, scale);
  }
  out.residual_sup = ev.sup;
  out.converged = ev.sup <= opts.newton_tol;
  if (out.converged) out.failure.clear();
  return out;
}

SolveResult homotopy_from(const SpacetimeField& start, std::span<const double> target,
                          const Problem& p, const SolverOptions& opts, std::optional<double> epsilon) {
  const auto count = start.grid().interior_size();
  if (target.size() != count) throw InputError("homotopy target has wrong size");
  for (double v : target) {
    if (!(v > 0.0)) throw InputError("homotopy target must be positive on interior nodes");
  }
  const int workers = opts.effective_workers();
  const std::vector<double> f_start = operator_values(start, p, workers);

  SolveResult out;
  out.field = start;
  {
    // tau = 0: the start field solves its own operator values exactly.
    const SolveResult zero = newton_solve(start, f_start, p, opts, "homotopy", 0.0, epsilon);
    out.trace.append(zero.trace);
    if (!zero.converged) {
      out.failure = "homotopy start is not admissible: " + zero.failure;
      out.residual_sup = zero.residual_sup;
      return out;
    }
  }
  double tau = 0.0;
  double step = std::min(opts.tau_step, opts.tau_step_max);
  int successes = 0;
  std::vector<double> rhs(count);
  while (tau < 1.0) {
    const double next = std::min(1.0, tau + step);
    for (std::size_t q = 0; q < count; ++q) {
      rhs[q] = next == 1.0 ? target[q] : (1.0 - next) * f_start[q] + next * target[q];
    }
    SolveResult r = newton_solve(out.field, rhs, p, opts, "homotopy", next, epsilon);
    out.trace.append(r.trace);
    if (r.converged) {
      out.field = std::move(r.field);
      out.iterations += r.iterations;
      out.residual_sup = r.residual_sup;
      tau = next;
      if (++successes >= 2) {
        step = std::min(2.0 * step, opts.tau_step_max);
        successes = 0;
      }
    } else {
      successes = 0;
      step *= 0.5;
      if (step < opts.tau_step_min) {
        std::ostringstream msg;
        msg << "tau step floor reached at tau = " << tau << " (" << r.failure << ")";
        out.failure = msg.str();
        out.residual_sup = r.residual_sup;
        return out;
      }
    }
  }
  out.converged = true;
  return out;
}

SolveResult homotopy_solve(const Problem& p, const SolverOptions& opts) {
  const SpacetimeField start = default_initializer(p, opts);
  return homotopy_from(start, interior_psi(p), p, opts);
}

std::string_view to_string(RegularizationMode m) {
  return m == RegularizationMode::rhs_epsilon ? "rhs-epsilon" : "gamma-epsilon";
}

Problem regularized_problem(const Problem& p, RegularizationMode mode, double eps) {
  Problem q = p;
  for (auto& v : q.psi) v += eps;
  if (mode == RegularizationMode::gamma_epsilon) q.coeffs.gamma += eps;
  return q;
}

DegenerateResult degenerate_solve(const Problem& p, const SolverOptions& opts,
                                  RegularizationMode mode) {
  if (mode == RegularizationMode::rhs_epsilon && !validate_theorem_regime(p.coeffs).any()) {
    throw ParameterError("rhs-epsilon mode needs gamma > 0 or (r > 0 and 2sk <= rn)");
  }
  if (mode == RegularizationMode::gamma_epsilon && p.coeffs.r == 0.0) {
    throw ParameterError("gamma-epsilon mode needs r != 0");
  }
  const int workers = opts.effective_workers();
  DegenerateResult out;
  std::optional<SpacetimeField> previous;
  for (double eps : opts.epsilon_schedule) {
    const Problem q = regularized_problem(p, mode, eps);
    const auto target = interior_psi(q);
    SpacetimeField start;
    bool warm = false;
    if (previous) {
      const ResidualEval ev = evaluate_residual(*previous, std::vector<double>(target.size(), 1.0), q,
                                                opts.admissibility_margin, workers);
      if (ev.strict) {
        start = *previous;
        warm = true;
      }
    }
    SolveResult r;
    try {
      if (!warm) start = default_initializer(q, opts);
      r = homotopy_from(start, target, q, opts, eps);
    } catch (const std::exception& e) {
      r.failure = e.what();
    }
    out.trace.append(r.trace);
    if (!r.converged) {
      std::ostringstream msg;
      msg << "epsilon = " << eps << ": " << r.failure;
      out.failure = msg.str();
      break;
    }
    out.epsilons.push_back(eps);
    out.norms.push_back(sup_norms(r.field, q));
    if (previous) out.consecutive_sup_diff.push_back(sup_distance(r.field, *previous));
    out.fields.push_back(r.field);
    previous = std::move(r.field);
  }
  out.complete = out.failure.empty();
  if (out.fields.empty()) return out;

  const std::size_t nf = out.fields.size();
  if (nf >= 2) {
    const auto& a = out.fields[nf - 2];
    const auto& b = out.fields[nf - 1];
    const double ea = out.epsilons[nf - 2];
    const double eb = out.epsilons[nf - 1];
    out.extrapolated = b;
    auto dst = out.extrapolated.values();
    const auto va = a.values();
    const auto vb = b.values();
    const double w = eb / (ea - eb);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = vb[i] + (vb[i] - va[i]) * w;
  } else {
    out.extrapolated = out.fields.back();
  }

  if (mode == RegularizationMode::rhs_epsilon) {
    bool ok = true;
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < nf; ++i) {
      const auto va = out.fields[i].values();
      const auto vb = out.fields[i + 1].values();
      for (std::size_t j = 0; j < va.size(); ++j) worst = std::max(worst, va[j] - vb[j]);
    }
    if (nf >= 2) ok = worst <= 1e-8;
    out.monotone = ok;
    out.monotonicity_worst = nf >= 2 ? worst : 0.0;
  }

  if (nf >= 3) {
    auto var = [&](std::size_t i, std::size_t j) {
      const SupNorms& a = out.norms[i];
      const SupNorms& b = out.norms[j];
      return std::array<double, 3>{std::abs(a.u - b.u), std::abs(a.ut - b.ut),
                                   std::abs(a.grad_u - b.grad_u)};
    };
    const auto first = var(0, 1);
    const auto last = var(nf - 2, nf - 1);
    bool stable = true;
    for (std::size_t c = 0; c < 3; ++c) stable = stable && last[c] <= 2.0 * first[c] + 1e-12;
    out.monitor_stable = stable;
  }
  return out;
}

}  // namespace gsge
