#include "gsge/cli_io.hpp"

#include "gsge/linearize.hpp"

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

namespace gsge {

namespace {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- config

template <class T>
T scalar(const YAML::Node& node, const std::string& key) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ParameterError("config key '" + key + "' has the wrong type");
  }
}

template <class T>
void read_opt(const YAML::Node& section, const char* key, const std::string& prefix, T& target) {
  if (const YAML::Node v = section[key]) target = scalar<T>(v, prefix + "." + key);
}

void check_keys(const YAML::Node& section, const std::string& name,
                std::initializer_list<const char*> allowed) {
  if (!section.IsMap()) throw ParameterError("config section '" + name + "' must be a mapping");
  for (const auto& kv : section) {
    const auto key = kv.first.as<std::string>();
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ParameterError("unknown config key '" + name + "." + key + "'");
    }
  }
}

std::array<double, 3> poly3(const YAML::Node& node, const std::string& key) {
  const auto v = scalar<std::vector<double>>(node, key);
  if (v.empty() || v.size() > 3) throw ParameterError("'" + key + "' needs 1 to 3 coefficients");
  std::array<double, 3> out{0.0, 0.0, 0.0};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

TrigField parse_trig(const YAML::Node& node, int n, const std::string& key) {
  check_keys(node, key, {"base", "modes"});
  std::array<double, 3> base{0.0, 0.0, 0.0};
  if (node["base"]) base = poly3(node["base"], key + ".base");
  std::vector<TrigMode> modes;
  if (const YAML::Node ms = node["modes"]) {
    if (!ms.IsSequence()) throw ParameterError("'" + key + ".modes' must be a list");
    for (std::size_t i = 0; i < ms.size(); ++i) {
      const std::string mk = key + ".modes[" + std::to_string(i) + "]";
      check_keys(ms[i], mk, {"amplitude", "frequency", "phase"});
      TrigMode m;
      if (!ms[i]["amplitude"] || !ms[i]["frequency"]) {
        throw ParameterError("'" + mk + "' needs amplitude and frequency");
      }
      m.amplitude = poly3(ms[i]["amplitude"], mk + ".amplitude");
      m.frequency = scalar<std::vector<int>>(ms[i]["frequency"], mk + ".frequency");
      if (ms[i]["phase"]) m.phase = scalar<std::vector<double>>(ms[i]["phase"], mk + ".phase");
      modes.push_back(std::move(m));
    }
  }
  try {
    return TrigField(n, base, std::move(modes));
  } catch (const std::invalid_argument& e) {
    throw ParameterError("'" + key + "': " + e.what());
  }
}

FieldSpec parse_field(const YAML::Node& node, int n, const std::string& key, const fs::path& base) {
  FieldSpec f;
  if (node.IsScalar()) {
    if (node.as<std::string>() == "manufactured") {
      f.kind = FieldSpec::Kind::manufactured;
    } else {
      f.value = scalar<double>(node, key);
    }
    return f;
  }
  if (!node.IsMap() || node.size() != 1) {
    throw ParameterError("'" + key + "' must have exactly one of constant, trig, file, manufactured");
  }
  check_keys(node, key, {"constant", "trig", "file", "manufactured"});
  if (node["constant"]) {
    f.value = scalar<double>(node["constant"], key + ".constant");
  } else if (node["trig"]) {
    f.kind = FieldSpec::Kind::trig;
    f.trig = parse_trig(node["trig"], n, key + ".trig");
  } else if (node["file"]) {
    f.kind = FieldSpec::Kind::file;
    f.path = base / scalar<std::string>(node["file"], key + ".file");
  } else {
    if (!scalar<bool>(node["manufactured"], key + ".manufactured")) {
      throw ParameterError("'" + key + ".manufactured' must be true");
    }
    f.kind = FieldSpec::Kind::manufactured;
  }
  return f;
}

RegularizationMode parse_regularization(const std::string& s) {
  if (s == "rhs-epsilon") return RegularizationMode::rhs_epsilon;
  if (s == "gamma-epsilon") return RegularizationMode::gamma_epsilon;
  throw ParameterError("solver.regularization must be rhs-epsilon or gamma-epsilon, got '" + s + "'");
}

RunConfig parse_root(const YAML::Node& root, const fs::path& base_dir) {
  if (!root.IsMap()) throw ParameterError("config must be a mapping of sections");
  check_keys(root, "config", {"problem", "grid", "solver", "run", "manufactured"});
  RunConfig cfg;
  cfg.base_dir = base_dir;

  const YAML::Node prob = root["problem"];
  if (!prob) throw ParameterError("missing config section 'problem'");
  check_keys(prob, "problem",
             {"n", "k", "gamma", "s", "r", "preset", "preset_tau", "A", "psi", "u0", "u1"});
  read_opt(prob, "n", "problem", cfg.coeffs.n);
  read_opt(prob, "k", "problem", cfg.coeffs.k);
  read_opt(prob, "gamma", "problem", cfg.coeffs.gamma);
  read_opt(prob, "s", "problem", cfg.coeffs.s);
  read_opt(prob, "r", "problem", cfg.coeffs.r);
  read_opt(prob, "preset_tau", "problem", cfg.preset_tau);
  if (prob["preset"]) {
    cfg.preset = scalar<std::string>(prob["preset"], "problem.preset");
    const Preset pr = preset_params(*cfg.preset, cfg.coeffs.n, cfg.preset_tau);
    cfg.coeffs.s = pr.s;
    cfg.coeffs.r = pr.r;
    cfg.coeffs.gamma = pr.gamma;
  }
  cfg.coeffs.validate();
  const int n = cfg.coeffs.n;

  if (const YAML::Node a = prob["A"]) {
    if (a.IsScalar()) {
      cfg.a.diagonal = scalar<double>(a, "problem.A");
    } else {
      check_keys(a, "problem.A", {"constant", "file"});
      if (a["file"]) {
        cfg.a.from_file = true;
        cfg.a.path = base_dir / scalar<std::string>(a["file"], "problem.A.file");
      } else if (a["constant"]) {
        cfg.a.diagonal = scalar<double>(a["constant"], "problem.A.constant");
      } else {
        throw ParameterError("'problem.A' needs constant or file");
      }
    }
  }
  if (prob["psi"]) cfg.psi = parse_field(prob["psi"], n, "problem.psi", base_dir);
  if (prob["u0"]) cfg.u0 = parse_field(prob["u0"], n, "problem.u0", base_dir);
  if (prob["u1"]) cfg.u1 = parse_field(prob["u1"], n, "problem.u1", base_dir);
  if (root["manufactured"]) cfg.manufactured = parse_trig(root["manufactured"], n, "manufactured");

  cfg.grid.n = n;
  if (const YAML::Node g = root["grid"]) {
    check_keys(g, "grid", {"nx", "nt"});
    read_opt(g, "nx", "grid", cfg.grid.nx);
    read_opt(g, "nt", "grid", cfg.grid.nt);
  }
  cfg.grid.validate();

  if (const YAML::Node s = root["solver"]) {
    check_keys(s, "solver",
               {"newton_tol", "max_newton", "damping", "damping_floor", "admissibility_margin",
                "tau_step", "tau_step_min", "tau_step_max", "epsilon_schedule", "workers",
                "dense_threshold", "krylov_tol", "krylov_max_iterations", "regularization"});
    SolverOptions& o = cfg.solver;
    read_opt(s, "newton_tol", "solver", o.newton_tol);
    read_opt(s, "max_newton", "solver", o.max_newton);
    read_opt(s, "damping", "solver", o.damping);
    read_opt(s, "damping_floor", "solver", o.damping_floor);
    read_opt(s, "admissibility_margin", "solver", o.admissibility_margin);
    read_opt(s, "tau_step", "solver", o.tau_step);
    read_opt(s, "tau_step_min", "solver", o.tau_step_min);
    read_opt(s, "tau_step_max", "solver", o.tau_step_max);
    read_opt(s, "epsilon_schedule", "solver", o.epsilon_schedule);
    read_opt(s, "workers", "solver", o.workers);
    read_opt(s, "dense_threshold", "solver", o.linear.dense_threshold);
    read_opt(s, "krylov_tol", "solver", o.linear.krylov_tol);
    read_opt(s, "krylov_max_iterations", "solver", o.linear.krylov_max_iterations);
    if (s["regularization"]) {
      cfg.regularization =
          parse_regularization(scalar<std::string>(s["regularization"], "solver.regularization"));
    }
  }

  if (const YAML::Node r = root["run"]) {
    check_keys(r, "run",
               {"mode", "seed", "out", "deterministic", "input", "deltas", "viscosity_trials",
                "samples", "write_jacobian"});
    read_opt(r, "mode", "run", cfg.mode);
    read_opt(r, "seed", "run", cfg.seed);
    read_opt(r, "deterministic", "run", cfg.solver.deterministic);
    read_opt(r, "deltas", "run", cfg.deltas);
    read_opt(r, "viscosity_trials", "run", cfg.viscosity_trials);
    read_opt(r, "samples", "run", cfg.samples);
    read_opt(r, "write_jacobian", "run", cfg.write_jacobian);
    if (r["out"]) cfg.out_dir = base_dir / scalar<std::string>(r["out"], "run.out");
    if (r["input"]) cfg.input = base_dir / scalar<std::string>(r["input"], "run.input");
  } else {
    cfg.out_dir = base_dir / cfg.out_dir;
  }
  for (double d : cfg.deltas) {
    if (!(d > 0.0)) throw ParameterError("run.deltas entries must be positive");
  }
  cfg.solver.validate();
  return cfg;
}

// ------------------------------------------------------------- snapshots

template <class T>
void put_le(std::ostream& out, T v) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  const U bits = std::bit_cast<U>(v);
  char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xffU);
  out.write(buf, sizeof buf);
}

template <class T>
T get_le(std::istream& in, const char* what) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  unsigned char buf[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof buf)) {
    throw IoError(std::string("truncated snapshot: missing ") + what);
  }
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(buf[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

// ----------------------------------------------------------- field specs

std::vector<double> spatial_field(const FieldSpec& f, const RunConfig& cfg, double t,
                                  const std::string& name) {
  const auto ns = cfg.grid.spatial_size();
  switch (f.kind) {
    case FieldSpec::Kind::constant:
      return std::vector<double>(ns, f.value);
    case FieldSpec::Kind::trig:
      return f.trig.sample(cfg.grid, t);
    case FieldSpec::Kind::file:
      return read_values_file(f.path, ns);
    case FieldSpec::Kind::manufactured:
      if (!cfg.manufactured) {
        throw InputError("problem." + name + " is manufactured but the config has no 'manufactured' section");
      }
      return cfg.manufactured->sample(cfg.grid, t);
  }
  return {};
}

// ---------------------------------------------------------------- output

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
}

void write_log(const fs::path& path, const SolveTrace& trace) {
  std::ostringstream s;
  write_iteration_log(trace, s);
  write_text(path, s.str());
}

nlohmann::ordered_json base_summary(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["mode"] = cfg.mode;
  j["n"] = cfg.coeffs.n;
  j["k"] = cfg.coeffs.k;
  j["gamma"] = cfg.coeffs.gamma;
  j["s"] = cfg.coeffs.s;
  j["r"] = cfg.coeffs.r;
  j["nx"] = cfg.grid.nx;
  j["nt"] = cfg.grid.nt;
  j["seed"] = cfg.seed;
  j["deterministic"] = cfg.solver.deterministic;
  const RegimeReport regime = validate_theorem_regime(cfg.coeffs);
  j["regime"] = {{"gamma_positive", regime.gamma_positive},
                 {"gradient_pattern", regime.gradient_pattern},
                 {"uniqueness", regime.uniqueness}};
  return j;
}

void finish(const RunConfig& cfg, nlohmann::ordered_json& j, int code) {
  j["exit_code"] = code;
  write_text(cfg.out_dir / "summary.json", j.dump(2) + "\n");
}

bool psi_vanishes(const Problem& p) {
  return std::all_of(p.psi.begin(), p.psi.end(), [](double v) { return v == 0.0; });
}

VerificationReport solution_checks(const SpacetimeField& u, const Problem& p, const RunConfig& cfg,
                                   bool degenerate) {
  VerificationReport rep = check_maximum_principle(u, p);
  rep.merge(monitor_estimates(u, p));
  if (degenerate) {
    ViscosityOptions vo;
    vo.trials = cfg.viscosity_trials;
    rep.merge(viscosity_spot_check(u, p, cfg.seed, vo));
    for (double delta : cfg.deltas) {
      const UniquenessApproximation a = uniqueness_approximation(u, p, delta);
      for (CheckResult c : a.report.checks) {
        c.name += "[delta=" + format_double(delta) + "]";
        rep.checks.push_back(std::move(c));
      }
    }
  }
  return rep;
}

// ----------------------------------------------------------------- modes

int run_init(const RunConfig& cfg, const Problem& p, std::ostream& err) {
  auto j = base_summary(cfg);
  try {
    const SpacetimeField v = default_initializer(p, cfg.solver);
    write_snapshot(v, cfg.out_dir / "init.gsge");
    const ResidualEval ev = evaluate_residual(v, std::vector<double>(p.grid.interior_size(), 1.0), p,
                                              cfg.solver.admissibility_margin);
    j["min_margin"] = ev.min_margin;
    j["strictly_admissible"] = ev.strict;
    finish(cfg, j, 0);
    return 0;
  } catch (const InitializationFailure& e) {
    err << "error: " << e.what() << '\n';
    j["failure"] = e.what();
    finish(cfg, j, 1);
    return 1;
  }
}

int run_solve(const RunConfig& cfg, const Problem& p, std::ostream& err) {
  const auto target = interior_psi(p);
  for (std::size_t q = 0; q < target.size(); ++q) {
    if (!(target[q] > 0.0)) {
      const auto ns = p.grid.spatial_size();
      throw InputError("psi must be positive at interior nodes for solve (use geodesic for psi = 0); "
                       "psi = " + format_double(target[q]) + " at node (level " +
                       std::to_string(q / ns + 1) + ", spatial " + std::to_string(q % ns) + ")");
    }
  }
  auto j = base_summary(cfg);
  SolveResult r;
  try {
    r = homotopy_from(default_initializer(p, cfg.solver), target, p, cfg.solver);
  } catch (const InitializationFailure& e) {
    r.failure = e.what();
  }
  write_log(cfg.out_dir / "iterations.log", r.trace);
  j["converged"] = r.converged;
  j["newton_iterations"] = r.iterations;
  j["residual_sup"] = r.residual_sup;
  if (!r.converged) {
    err << "error: solve failed: " << r.failure << '\n';
    j["failure"] = r.failure;
    finish(cfg, j, 1);
    return 1;
  }
  write_snapshot(r.field, cfg.out_dir / "solution.gsge");
  if (cfg.manufactured) {
    j["manufactured_error"] = sup_distance(r.field, cfg.manufactured->sample(p.grid));
  }
  if (cfg.write_jacobian) {
    std::ofstream out(cfg.out_dir / "jacobian.coo");
    write_coordinate_text(assemble_jacobian(r.field, p), out);
  }
  const VerificationReport rep = solution_checks(r.field, p, cfg, false);
  write_text(cfg.out_dir / "report.txt", rep.to_text());
  j["report_passed"] = rep.passed();
  finish(cfg, j, 0);
  return 0;
}

int run_slice(const RunConfig& cfg, const Problem& p, std::ostream& err) {
  if (!(p.coeffs.gamma > 0.0)) throw ParameterError("slice mode requires problem.gamma > 0");
  auto j = base_summary(cfg);
  SpacetimeField v = p.boundary_field();
  SolveTrace trace;
  std::vector<double> guess = p.u0;
  double worst = 0.0;
  for (int m = 1; m <= p.grid.nt; ++m) {
    const auto rhs = slice_rhs(p, m);
    const SliceSolveResult r =
        elliptic_slice_solve(p, m, rhs, cfg.solver, std::span<const double>(guess));
    trace.append(r.trace);
    worst = std::max(worst, r.residual_sup);
    if (!r.converged) {
      write_log(cfg.out_dir / "iterations.log", trace);
      const std::string msg = "slice solve failed at time level " + std::to_string(m) +
                              " (residual " + format_double(r.residual_sup) + ")";
      err << "error: " << msg << '\n';
      j["failure"] = msg;
      finish(cfg, j, 1);
      return 1;
    }
    std::copy(r.field.begin(), r.field.end(), v.slice(m).begin());
    guess = r.field;
  }
  write_log(cfg.out_dir / "iterations.log", trace);
  write_snapshot(v, cfg.out_dir / "slice.gsge");
  j["residual_sup"] = worst;
  finish(cfg, j, 0);
  return 0;
}

int run_geodesic(const RunConfig& cfg, const Problem& p, std::ostream& err) {
  auto j = base_summary(cfg);
  j["regularization"] = std::string(to_string(cfg.regularization));
  const DegenerateResult d = degenerate_solve(p, cfg.solver, cfg.regularization);
  write_log(cfg.out_dir / "iterations.log", d.trace);
  {
    std::ostringstream s;
    write_norm_table(d, s);
    write_text(cfg.out_dir / "eps_sweep.csv", s.str());
  }
  j["epsilons"] = d.epsilons;
  j["consecutive_sup_diff"] = d.consecutive_sup_diff;
  if (d.monotone) j["monotone"] = *d.monotone;
  j["monotonicity_worst"] = d.monotonicity_worst;
  if (d.monitor_stable) j["monitor_stable"] = *d.monitor_stable;
  j["complete"] = d.complete;
  if (!d.fields.empty()) {
    write_snapshot(d.fields.back(), cfg.out_dir / "geodesic_last.gsge");
    write_snapshot(d.extrapolated, cfg.out_dir / "geodesic.gsge");
  }
  if (!d.complete) {
    err << "error: geodesic solve failed: " << d.failure << '\n';
    j["failure"] = d.failure;
    finish(cfg, j, 1);
    return 1;
  }
  const VerificationReport rep = solution_checks(d.extrapolated, p, cfg, psi_vanishes(p));
  write_text(cfg.out_dir / "report.txt", rep.to_text());
  j["report_passed"] = rep.passed();
  finish(cfg, j, 0);
  return 0;
}

int run_verify(const RunConfig& cfg, const Problem& p, std::ostream& err) {
  auto j = base_summary(cfg);
  VerificationReport rep = check_cone_propagation(cfg.seed, cfg.samples);
  rep.merge(check_concavity(cfg.seed, cfg.samples));
  if (cfg.input) {
    const SpacetimeField u = read_snapshot(*cfg.input);
    if (!(u.grid() == p.grid)) {
      throw InputError("run.input grid (n, nx, nt) does not match the config grid");
    }
    rep.merge(solution_checks(u, p, cfg, psi_vanishes(p)));
  }
  write_text(cfg.out_dir / "report.txt", rep.to_text());
  j["report_passed"] = rep.passed();
  const int code = rep.passed() ? 0 : 1;
  if (code != 0) err << "error: verification failed, see report.txt\n";
  finish(cfg, j, code);
  return code;
}

}  // namespace

RunConfig parse_config(const std::string& text, const fs::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ParameterError(std::string("config is not valid YAML: ") + e.what());
  }
  return parse_root(root, base_dir);
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path.string() + "'");
  std::stringstream s;
  s << in.rdbuf();
  return parse_config(s.str(), path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

std::vector<double> read_values_file(const fs::path& path, std::size_t expected) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read field file '" + path.string() + "'");
  std::vector<double> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) {
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0' || !std::isfinite(v)) {
        throw InputError("'" + path.string() + "' line " + std::to_string(lineno) +
                         ": not a finite number: " + tok);
      }
      out.push_back(v);
    }
  }
  if (out.size() != expected) {
    throw InputError("'" + path.string() + "' has " + std::to_string(out.size()) +
                     " values, expected " + std::to_string(expected));
  }
  return out;
}

std::vector<SymMatrix> read_tensor_file(const fs::path& path, int n, std::size_t nodes) {
  const std::size_t per = static_cast<std::size_t>(n * (n + 1) / 2);
  const auto values = read_values_file(path, per * nodes);
  std::vector<SymMatrix> out(nodes, SymMatrix::Zero(n, n));
  std::size_t idx = 0;
  for (auto& a : out) {
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        a(i, j) = values[idx++];
        a(j, i) = a(i, j);
      }
    }
  }
  return out;
}

Problem build_problem(const RunConfig& cfg) {
  Problem p;
  p.coeffs = cfg.coeffs;
  p.grid = cfg.grid;
  const auto ns = cfg.grid.spatial_size();
  const int n = cfg.coeffs.n;
  if (cfg.a.from_file) {
    p.a_field = read_tensor_file(cfg.a.path, n, ns);
  } else {
    p.a_field.assign(ns, cfg.a.diagonal * SymMatrix::Identity(n, n));
  }
  if (!cfg.u0) throw InputError("missing field spec 'problem.u0'");
  if (!cfg.u1) throw InputError("missing field spec 'problem.u1'");
  if (!cfg.psi) throw InputError("missing field spec 'problem.psi'");
  p.u0 = spatial_field(*cfg.u0, cfg, 0.0, "u0");
  p.u1 = spatial_field(*cfg.u1, cfg, 1.0, "u1");
  const FieldSpec& psi = *cfg.psi;
  switch (psi.kind) {
    case FieldSpec::Kind::constant:
      p.psi.assign(cfg.grid.total_size(), psi.value);
      break;
    case FieldSpec::Kind::trig:
    {
      const SpacetimeField f = psi.trig.sample(cfg.grid);
      p.psi.assign(f.values().begin(), f.values().end());
      break;
    }
    case FieldSpec::Kind::file:
      p.psi = read_values_file(psi.path, cfg.grid.total_size());
      break;
    case FieldSpec::Kind::manufactured:
      if (!cfg.manufactured) {
        throw InputError("problem.psi is manufactured but the config has no 'manufactured' section");
      }
      p.psi = manufactured_rhs(*cfg.manufactured, p);
      break;
  }
  p.validate();
  return p;
}

void write_snapshot(const SpacetimeField& field, std::ostream& out) {
  char magic[9];
  std::snprintf(magic, sizeof magic, "%s%04d", kSnapshotMagic, kSnapshotVersion);
  out.write(magic, 8);
  const GridSpec& g = field.grid();
  put_le(out, static_cast<std::uint32_t>(g.n));
  put_le(out, static_cast<std::uint32_t>(g.nx));
  put_le(out, static_cast<std::uint32_t>(g.nt));
  for (double v : field.values()) put_le(out, v);
  if (!out) throw IoError("snapshot write failed");
}

void write_snapshot(const SpacetimeField& field, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write snapshot '" + path.string() + "'");
  write_snapshot(field, out);
}

SpacetimeField read_snapshot(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8)) throw IoError("truncated snapshot: missing magic");
  if (std::memcmp(magic, kSnapshotMagic, 4) != 0 ||
      !std::all_of(magic + 4, magic + 8, [](char c) { return c >= '0' && c <= '9'; })) {
    throw IoError("not a snapshot file: bad magic");
  }
  const int version = std::stoi(std::string(magic + 4, 4));
  if (version != kSnapshotVersion) {
    throw IoError("unsupported snapshot version " + std::to_string(version) + " (supported: " +
                  std::to_string(kSnapshotVersion) + ")");
  }
  GridSpec g;
  g.n = static_cast<int>(get_le<std::uint32_t>(in, "n"));
  g.nx = static_cast<int>(get_le<std::uint32_t>(in, "nx"));
  g.nt = static_cast<int>(get_le<std::uint32_t>(in, "nt"));
  try {
    g.validate();
  } catch (const ParameterError& e) {
    throw IoError(std::string("snapshot header: ") + e.what());
  }
  std::vector<double> values(g.total_size());
  for (auto& v : values) v = get_le<double>(in, "values");
  if (in.peek() != std::char_traits<char>::eof()) throw IoError("snapshot has trailing bytes");
  return SpacetimeField(g, std::move(values));
}

SpacetimeField read_snapshot(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read snapshot '" + path.string() + "'");
  return read_snapshot(in);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_iteration_log(const SolveTrace& trace, std::ostream& out) {
  for (const auto& r : trace.records) {
    out << "phase=" << r.phase << " tau=" << format_double(r.tau);
    if (r.epsilon) out << " epsilon=" << format_double(*r.epsilon);
    out << " iter=" << r.iter << " residual_sup=" << format_double(r.residual_sup)
        << " min_margin=" << format_double(r.min_margin)
        << " step_scale=" << format_double(r.step_scale) << " wall_ms=" << format_double(r.wall_ms)
        << '\n';
  }
}

void write_norm_table(const DegenerateResult& d, std::ostream& out) {
  out << "epsilon,sup_u,sup_ut,sup_grad_u,max_utt,sup_hess_u,sup_grad_ut,sup_diff_previous\n";
  for (std::size_t i = 0; i < d.epsilons.size(); ++i) {
    const SupNorms& s = d.norms[i];
    out << format_double(d.epsilons[i]) << ',' << format_double(s.u) << ',' << format_double(s.ut)
        << ',' << format_double(s.grad_u) << ',' << format_double(s.utt_max) << ','
        << format_double(s.hess_u) << ',' << format_double(s.grad_ut) << ','
        << (i == 0 ? std::string() : format_double(d.consecutive_sup_diff[i - 1])) << '\n';
  }
}

int run(const RunConfig& cfg, std::ostream& err) {
  try {
    const Problem p = build_problem(cfg);
    ensure_dir(cfg.out_dir);
    if (cfg.mode == "init") return run_init(cfg, p, err);
    if (cfg.mode == "solve") return run_solve(cfg, p, err);
    if (cfg.mode == "slice") return run_slice(cfg, p, err);
    if (cfg.mode == "geodesic") return run_geodesic(cfg, p, err);
    if (cfg.mode == "verify") return run_verify(cfg, p, err);
    throw ParameterError("unknown mode '" + cfg.mode + "'");
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {  // ParameterError, InputError
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

int run(const CliOptions& cli, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = load_config(cli.config);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  if (!cli.mode.empty()) cfg.mode = cli.mode;
  if (cli.out) cfg.out_dir = *cli.out;
  if (cli.seed) cfg.seed = *cli.seed;
  if (cli.deterministic) cfg.solver.deterministic = true;
  return run(cfg, err);
}

}  // namespace gsge
