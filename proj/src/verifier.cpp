#include "gsge/verifier.hpp"

#include "gsge/symfunc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace gsge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string node_text(Node nd) {
  return "(level " + std::to_string(nd.level) + ", spatial " + std::to_string(nd.spatial) + ")";
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Matrix random_symmetric(std::mt19937_64& rng, int n, double shift_max) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> shift(0.0, shift_max);
  Matrix a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      a(i, j) = normal(rng);
      a(j, i) = a(i, j);
    }
  }
  a.diagonal().array() += shift(rng);
  return a;
}

Vector random_vector(std::mt19937_64& rng, int n, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

/// min_j sigma_j(a) / (C(n,j) |a|^j): scale-free cone slack.
double relative_cone_margin(const Matrix& a, int k) {
  const double scale = std::max(a.norm(), 1e-300);
  const auto s = sigma_all(a, k);
  double m = kInf;
  for (int j = 1; j <= k; ++j) {
    m = std::min(m, s[static_cast<std::size_t>(j)] /
                        (binomial(static_cast<int>(a.rows()), j) * std::pow(scale, j)));
  }
  return m;
}

CheckResult make_check(std::string name) {
  CheckResult c;
  c.name = std::move(name);
  c.worst_margin = kInf;
  return c;
}

void observe(CheckResult& c, double margin, bool violated) {
  ++c.samples;
  c.worst_margin = std::min(c.worst_margin, margin);
  if (violated) {
    ++c.violations;
    c.passed = false;
  }
}

double interpolated_boundary(const Problem& p, Node nd) {
  const double t = p.grid.time(nd.level);
  return (1.0 - t) * p.u0[nd.spatial] + t * p.u1[nd.spatial];
}

}  // namespace

bool VerificationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckResult& c) { return !c.enforced || c.passed; });
}

const CheckResult* VerificationReport::find(std::string_view name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

void VerificationReport::merge(const VerificationReport& other) {
  checks.insert(checks.end(), other.checks.begin(), other.checks.end());
}

std::string VerificationReport::to_text() const {
  std::ostringstream out;
  for (const auto& c : checks) {
    const char* status = !c.enforced ? "INFO" : (c.passed ? "PASS" : "FAIL");
    out << "check=" << c.name << " status=" << status << " worst_margin=" << num(c.worst_margin)
        << " samples=" << c.samples << " violations=" << c.violations;
    if (!c.detail.empty()) out << " detail=\"" << c.detail << '"';
    out << '\n';
  }
  return out.str();
}

std::mt19937_64 check_stream(std::uint64_t seed, std::string_view check) {
  // FNV-1a over the name, mixed with the seed by splitmix64.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : check) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::uint64_t z = seed ^ h;
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return std::mt19937_64(z);
}

VerificationReport check_cone_propagation(std::uint64_t seed, std::size_t samples,
                                          const ConePropagationOptions& opts) {
  auto rng = check_stream(seed, "cone_propagation");
  std::uniform_int_distribution<int> dim(1, std::clamp(opts.max_n, 1, kMaxDim));
  std::uniform_real_distribution<double> utt_dist(0.05, 3.0);
  CheckResult c = make_check("cone_propagation");
  std::size_t drawn = 0;
  while (c.samples < samples) {
    ++drawn;
    const int n = dim(rng);
    const int k = std::uniform_int_distribution<int>(1, n)(rng);
    const Matrix w = random_symmetric(rng, n, 3.0);
    const double utt = utt_dist(rng);
    const Vector g = random_vector(rng, n, 0.8);
    if (!in_gamma_k(w, k)) continue;
    const Matrix e = utt * w - g * g.transpose();
    if (opts.filter_sigma_e && !(sigma(e, k) > 0.0)) continue;
    const double m = relative_cone_margin(e, k);
    observe(c, m, m < -1e-12);
  }
  c.detail = "drawn=" + std::to_string(drawn) +
             (opts.filter_sigma_e ? "" : " sigma_k(E) filter disabled");
  return {{c}};
}

bool in_cone_s(const AugmentedMatrix& r, int k) {
  if (!(r.r00() > 0.0)) return false;
  if (!in_gamma_k(static_cast<SymMatrix>(r.spatial()), k)) return false;
  return f_k(r, k) > 0.0;
}

bool in_cone_s_closure(const AugmentedMatrix& r, int k, double tol) {
  if (r.r00() < -tol) return false;
  const auto s = sigma_all(static_cast<SymMatrix>(r.spatial()), k);
  for (int j = 1; j <= k; ++j) {
    if (s[static_cast<std::size_t>(j)] < -tol) return false;
  }
  return f_k(r, k) >= -tol;
}

VerificationReport check_concavity(std::uint64_t seed, std::size_t samples,
                                   const ConcavityOptions& opts) {
  auto rng = check_stream(seed, "concavity");
  std::uniform_int_distribution<int> dim(1, std::clamp(opts.max_n, 1, kMaxDim));
  std::uniform_real_distribution<double> r00_dist(0.05, 3.0);
  CheckResult log_check = make_check("concavity_log");
  CheckResult pow_check = make_check("concavity_power");
  CheckResult closure = make_check("cone_s_midpoint");

  auto draw = [&](int n, int k) {
    while (true) {
      const AugmentedMatrix r = AugmentedMatrix::from_blocks(
          r00_dist(rng), random_vector(rng, n, 0.6), random_symmetric(rng, n, 3.0));
      if (in_cone_s(r, k)) return r;
    }
  };

  for (std::size_t i = 0; i < samples; ++i) {
    const int n = dim(rng);
    const int k = std::uniform_int_distribution<int>(1, n)(rng);
    const double p = opts.exponent.value_or(1.0 / (k + 1));
    const AugmentedMatrix a = draw(n, k);
    AugmentedMatrix b;
    if (i % 10 == 9) {
      b.r = 2.0 * a.r;
    } else {
      b = draw(n, k);
    }
    AugmentedMatrix mid;
    mid.r = 0.5 * (a.r + b.r);
    const bool inside = in_cone_s(mid, k);
    observe(closure, inside ? 0.0 : -1.0, !inside);
    if (!inside) continue;
    const double fa = f_k(a, k);
    const double fb = f_k(b, k);
    const double fm = f_k(mid, k);
    const double lm = std::log(fm) - 0.5 * (std::log(fa) + std::log(fb));
    observe(log_check, lm, lm < -1e-10);
    const double avg = 0.5 * (std::pow(fa, p) + std::pow(fb, p));
    const double pm = (std::pow(fm, p) - avg) / std::max(1.0, avg);
    observe(pow_check, pm, pm < -1e-10);
  }
  if (opts.exponent) pow_check.detail = "exponent=" + num(*opts.exponent);
  return {{log_check, pow_check, closure}};
}

VerificationReport check_maximum_principle(const SpacetimeField& u, const Problem& p) {
  const GridSpec& g = u.grid();
  CheckResult upper = make_check("max_principle_upper");
  CheckResult convex = make_check("max_principle_utt");
  Node worst_upper;
  Node worst_convex;
  const double dt2 = g.dt() * g.dt();
  for (int m = 1; m <= g.nt; ++m) {
    for (std::size_t x = 0; x < g.spatial_size(); ++x) {
      const Node nd{m, x};
      const double slack = interpolated_boundary(p, nd) + 1e-8 - u(m, x);
      if (slack < upper.worst_margin) worst_upper = nd;
      observe(upper, slack, slack < 0.0);
      const double utt = (u(m + 1, x) - 2.0 * u(m, x) + u(m - 1, x)) / dt2;
      const double cslack = utt + 1e-8;
      if (cslack < convex.worst_margin) worst_convex = nd;
      observe(convex, cslack, cslack < 0.0);
    }
  }
  upper.detail = "worst node " + node_text(worst_upper);
  convex.detail = "worst node " + node_text(worst_convex);
  return {{upper, convex}};
}

double trace_inequality_excess(const Jet& jet, const Coefficients& c) {
  return jet.grad_ut.squaredNorm() - jet.utt * assemble_w(jet, c).trace();
}

VerificationReport monitor_estimates(const SpacetimeField& u, const Problem& p) {
  const SupNorms s = sup_norms(u, p);
  VerificationReport rep;
  auto info = [&](const char* name, double v) {
    CheckResult c;
    c.name = name;
    c.enforced = false;
    c.worst_margin = v;
    c.samples = u.grid().interior_size();
    rep.checks.push_back(c);
  };
  info("sup_u", s.u);
  info("sup_ut", s.ut);
  info("sup_grad_u", s.grad_u);
  info("max_utt", s.utt_max);
  info("sup_hess_u", s.hess_u);
  info("sup_grad_ut", s.grad_ut);

  CheckResult trace = make_check("trace_inequality");
  Node worst;
  const GridSpec& g = u.grid();
  for (int m = 1; m <= g.nt; ++m) {
    for (std::size_t x = 0; x < g.spatial_size(); ++x) {
      const Jet jet = jet_at(u, {m, x}, p);
      const double slack = 1e-8 - trace_inequality_excess(jet, p.coeffs);
      if (slack < trace.worst_margin) worst = {m, x};
      observe(trace, slack, slack < 0.0);
    }
  }
  trace.detail = "worst node " + node_text(worst);
  rep.checks.push_back(trace);
  return rep;
}

ViscosityBranches viscosity_branches(const Jet& phi, const Coefficients& c, double psi, double tol) {
  ViscosityBranches b;
  const AugmentedMatrix r = assemble_r(phi, c);
  b.f = f_k(r, c.k);
  b.super_ok = !in_cone_s_closure(r, c.k, tol) || b.f <= psi + tol;
  b.sub_ok = b.f >= psi - tol;
  return b;
}

VerificationReport viscosity_spot_check(const SpacetimeField& u, const Problem& p,
                                        std::uint64_t seed, const ViscosityOptions& opts) {
  auto rng = check_stream(seed, "viscosity");
  const GridSpec& g = u.grid();
  const int n = g.n;
  const int dim = n + 1;
  std::uniform_int_distribution<int> level(1, g.nt);
  std::uniform_int_distribution<std::size_t> spatial(0, g.spatial_size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Neighbour offsets in {-1,0,1}^{n+1} \ {0}; component 0 is time.
  std::vector<std::vector<int>> offsets;
  {
    std::vector<int> o(static_cast<std::size_t>(dim), -1);
    while (true) {
      if (std::any_of(o.begin(), o.end(), [](int v) { return v != 0; })) offsets.push_back(o);
      int a = 0;
      while (a < dim && o[static_cast<std::size_t>(a)] == 1) o[static_cast<std::size_t>(a++)] = -1;
      if (a == dim) break;
      ++o[static_cast<std::size_t>(a)];
    }
  }

  CheckResult super = make_check("viscosity_supersolution");
  CheckResult sub = make_check("viscosity_subsolution");
  std::size_t untouched = 0;
  Node worst_super;
  Node worst_sub;
  for (std::size_t trial = 0; trial < opts.trials; ++trial) {
    const Node nd{level(rng), spatial(rng)};
    const bool below = trial % 2 == 0;
    const Jet jet = jet_at(u, nd, p);

    Matrix h(dim, dim);
    h(0, 0) = jet.utt;
    h.block(1, 0, n, 1) = jet.grad_ut;
    h.block(0, 1, 1, n) = jet.grad_ut.transpose();
    h.block(1, 1, n, n) = jet.hess_u;
    Vector grad(dim);
    grad(0) = jet.ut;
    grad.tail(n) = jet.grad_u;

    Matrix b(dim, dim);
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) b(i, j) = normal(rng);
    }
    Matrix pm = b * b.transpose() + 0.1 * Matrix::Identity(dim, dim);
    pm /= pm.norm();
    const double bound = opts.curvature_bound * std::max(1.0, h.norm());
    const double rho = unit(rng) * bound;

    // Smallest curvature lambda making u - phi extremal at the node.
    double need = 0.0;
    const double u0 = u(nd.level, nd.spatial);
    for (const auto& o : offsets) {
      Vector d(dim);
      d(0) = o[0] * g.dt();
      std::size_t x = nd.spatial;
      for (int i = 0; i < n; ++i) {
        d(i + 1) = o[static_cast<std::size_t>(i + 1)] * g.h();
        x = g.shift(x, i, o[static_cast<std::size_t>(i + 1)]);
      }
      const double taylor = u0 + grad.dot(d) + 0.5 * d.dot(h * d);
      const double res = u(nd.level + o[0], x) - taylor;
      const double q = d.dot(pm * d);
      need = std::max(need, (below ? -2.0 : 2.0) * res / q);
    }
    if (need > bound) {
      ++untouched;
      continue;
    }
    const double lambda = std::max(need, rho);
    const double sign = below ? -1.0 : 1.0;
    Jet phi = jet;
    phi.utt += sign * lambda * pm(0, 0);
    phi.grad_ut += sign * lambda * pm.block(1, 0, n, 1);
    phi.hess_u += sign * lambda * pm.block(1, 1, n, n);
    const double psi = p.psi_at(nd);
    const ViscosityBranches vb = viscosity_branches(phi, p.coeffs, psi, opts.tol);
    if (below) {
      const double margin = in_cone_s_closure(assemble_r(phi, p.coeffs), p.coeffs.k, opts.tol)
                                ? psi + opts.tol - vb.f
                                : opts.tol;
      if (margin < super.worst_margin) worst_super = nd;
      observe(super, margin, !vb.super_ok);
    } else {
      const double margin = vb.f - psi + opts.tol;
      if (margin < sub.worst_margin) worst_sub = nd;
      observe(sub, margin, !vb.sub_ok);
    }
  }
  const std::string note = "randomised spot-check with quadratic test functions, curvature bound " +
                           num(opts.curvature_bound) + "x jet scale; untouched trials " +
                           std::to_string(untouched);
  super.detail = note + "; worst node " + node_text(worst_super);
  sub.detail = note + "; worst node " + node_text(worst_sub);
  return {{super, sub}};
}

std::vector<double> nodal_operator(const SpacetimeField& u, const Problem& p) {
  const GridSpec& g = u.grid();
  const auto ns = g.spatial_size();
  std::vector<double> out(g.interior_size());
  for (std::size_t q = 0; q < out.size(); ++q) {
    const Jet jet = jet_at(u, {static_cast<int>(q / ns) + 1, q % ns}, p);
    out[q] = residual_pair(jet, p.coeffs).direct;
  }
  return out;
}

namespace {

SpacetimeField theta_field(const SpacetimeField& u, double theta) {
  SpacetimeField v = u;
  const GridSpec& g = u.grid();
  for (int m = 0; m < static_cast<int>(g.levels()); ++m) {
    const double t = g.time(m);
    for (auto& value : v.slice(m)) value = (1.0 - theta) * value + theta * t * (t - 1.0);
  }
  return v;
}

SpacetimeField smooth_once(const SpacetimeField& v, double omega) {
  SpacetimeField out = v;
  if (omega == 0.0) return out;
  const GridSpec& g = v.grid();
  const double count = 2.0 * (g.n + 1);
  for (int m = 1; m <= g.nt; ++m) {
    for (std::size_t x = 0; x < g.spatial_size(); ++x) {
      double sum = v(m - 1, x) + v(m + 1, x);
      for (int i = 0; i < g.n; ++i) sum += v(m, g.shift(x, i, 1)) + v(m, g.shift(x, i, -1));
      out(m, x) = (1.0 - omega) * v(m, x) + omega * sum / count;
    }
  }
  return out;
}

struct Bounds {
  double min_f = kInf;
  double max_f = -kInf;
  Node min_node;
  Node max_node;
  double distance = 0.0;
};

Bounds measure(const SpacetimeField& v, const SpacetimeField& u, const Problem& p) {
  Bounds b;
  const auto f = nodal_operator(v, p);
  const auto ns = v.grid().spatial_size();
  for (std::size_t q = 0; q < f.size(); ++q) {
    const Node nd{static_cast<int>(q / ns) + 1, q % ns};
    if (f[q] < b.min_f) {
      b.min_f = f[q];
      b.min_node = nd;
    }
    if (f[q] > b.max_f || std::isnan(f[q])) {
      b.max_f = std::isnan(f[q]) ? kInf : f[q];
      b.max_node = nd;
    }
  }
  b.distance = sup_distance(u, v);
  return b;
}

}  // namespace

UniquenessApproximation uniqueness_approximation(const SpacetimeField& u, const Problem& p,
                                                 double delta) {
  if (!(delta > 0.0)) throw ParameterError("delta must be positive");
  UniquenessApproximation out;
  CheckResult cone = make_check("approximation_cone_condition");
  const bool cone_ok = approximation_cone_condition(p.coeffs);
  observe(cone, cone_ok ? 0.0 : -1.0, !cone_ok);
  cone.detail = "(r/2, ..., r/2, r/2 - s) in closure(Gamma_k)";
  CheckResult regime = make_check("approximation_regime");
  regime.enforced = false;
  regime.passed = validate_theorem_regime(p.coeffs).uniqueness;
  regime.worst_margin = regime.passed ? 0.0 : -1.0;
  regime.detail = regime.passed ? "hypotheses hold" : "outside the uniqueness hypotheses (reported only)";
  out.report.checks = {cone, regime};
  out.field = u;
  if (!cone_ok) return out;

  auto upper_ok = [&](const Bounds& b) { return b.max_f <= delta && b.distance <= delta; };
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (upper_ok(measure(theta_field(u, mid), u, p))) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  CheckResult bis = make_check("approximation_bounds");
  out.theta = lo;
  SpacetimeField v = theta_field(u, lo);
  Bounds b = measure(v, u, p);
  if (lo == 0.0) {
    observe(bis, -1.0, true);
    bis.detail = "bisection found no theta in (0,1); worst node " + node_text(b.max_node);
    out.report.checks.push_back(bis);
    return out;
  }
  // Largest smoothing weight that keeps the bounds.
  for (double omega = 0.5; omega >= 0x1p-10; omega *= 0.5) {
    SpacetimeField s = smooth_once(v, omega);
    const Bounds bs = measure(s, u, p);
    if (bs.min_f > 0.0 && upper_ok(bs)) {
      v = std::move(s);
      b = bs;
      out.omega = omega;
      break;
    }
  }
  const double margin = std::min({b.min_f, delta - b.max_f, delta - b.distance});
  const bool ok = b.min_f > 0.0 && upper_ok(b);
  observe(bis, margin, !ok);
  bis.detail = "theta=" + num(lo) + " omega=" + num(out.omega) + " min_F=" + num(b.min_f) +
               " max_F=" + num(b.max_f) + " distance=" + num(b.distance);
  if (!ok) bis.detail += "; worst node " + node_text(b.min_f > 0.0 ? b.max_node : b.min_node);
  out.report.checks.push_back(bis);
  out.field = std::move(v);
  out.min_f = b.min_f;
  out.max_f = b.max_f;
  out.distance = b.distance;
  out.ok = ok;
  return out;
}

VerificationReport comparison_uniqueness_test(const SpacetimeField& u1, const SpacetimeField& u2,
                                              const Problem& p, double delta, double tol) {
  const bool enforced =
      validate_theorem_regime(p.coeffs).uniqueness && approximation_cone_condition(p.coeffs);
  VerificationReport rep;
  const UniquenessApproximation a1 = uniqueness_approximation(u1, p, delta);
  CheckResult chain = make_check("comparison_max_principle");
  CheckResult dist = make_check("comparison_distance");
  chain.enforced = enforced;
  dist.enforced = enforced;
  const std::string gate = enforced ? "" : "outside the uniqueness hypotheses (reported only); ";
  if (!a1.ok) {
    observe(chain, -1.0, true);
    chain.detail = gate + "first approximant failed";
    rep.checks = {chain};
    return rep;
  }
  const double delta2 = a1.min_f;
  const UniquenessApproximation a2 = uniqueness_approximation(u2, p, delta2);
  if (!a2.ok) {
    observe(chain, -1.0, true);
    chain.detail = gate + "second approximant failed at delta=" + num(delta2);
    rep.checks = {chain};
    return rep;
  }
  const GridSpec& g = u1.grid();
  double interior = -kInf;
  double boundary = -kInf;
  for (int m = 0; m < static_cast<int>(g.levels()); ++m) {
    for (std::size_t x = 0; x < g.spatial_size(); ++x) {
      const double d = a1.field(m, x) - a2.field(m, x);
      if (m == 0 || m == g.nt + 1) {
        boundary = std::max(boundary, d);
      } else {
        interior = std::max(interior, d);
      }
    }
  }
  const double chain_margin = boundary + tol - interior;
  observe(chain, chain_margin, chain_margin < 0.0);
  chain.detail = gate + "max interior(v1-v2)=" + num(interior) + " max boundary=" + num(boundary) +
                 " delta2=" + num(delta2);
  const double d = sup_distance(u1, u2);
  const double dist_margin = 2.0 * delta + tol - d;
  observe(dist, dist_margin, dist_margin < 0.0);
  dist.detail = gate + "|u1-u2|=" + num(d) + " bound=" + num(2.0 * delta + tol);
  rep.checks = {chain, dist};
  return rep;
}

}  // namespace gsge
