#include "gsge/cli_io.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace gsge;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("gsge_cli_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string snapshot_bytes(const SpacetimeField& f) {
  std::ostringstream out(std::ios::binary);
  write_snapshot(f, out);
  return out.str();
}

SpacetimeField random_field(const GridSpec& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  SpacetimeField f(g);
  for (auto& v : f.values()) v = normal(rng);
  return f;
}

const char* kManufactured = R"(
problem:
  n: 2
  k: 2
  gamma: 0.1
  s: 1
  r: 1
  A: {constant: 6}
  psi: manufactured
  u0: manufactured
  u1: manufactured
manufactured:
  base: [0, 0, 0.5]
  modes:
    - amplitude: [0.05, 0.025]
      frequency: [1, 1]
grid: {nx: 8, nt: 3}
run:
  mode: solve
  seed: 3
  out: out
)";

const char* kGeodesic = R"(
problem:
  n: 2
  k: 1
  preset: schouten
  A: 1
  psi: 0
  u0: 0.3
  u1: 0.3
grid: {nx: 8, nt: 3}
solver:
  epsilon_schedule: [1e-1, 1e-2, 1e-3]
run:
  mode: geodesic
  viscosity_trials: 200
  out: out
)";

int run_text(const std::string& text, const fs::path& dir, std::string* err_text = nullptr,
             const std::string& mode = "") {
  spit(dir / "config.yaml", text);
  CliOptions cli;
  cli.config = dir / "config.yaml";
  cli.mode = mode;
  cli.deterministic = true;
  std::ostringstream err;
  const int code = run(cli, err);
  if (err_text) *err_text = err.str();
  return code;
}

}  // namespace

TEST(Snapshot, RoundTripIsBitwise) {
  const SpacetimeField f = random_field(GridSpec{3, 4, 2}, 1);
  std::istringstream in(snapshot_bytes(f), std::ios::binary);
  const SpacetimeField g = read_snapshot(in);
  EXPECT_TRUE(g.grid() == f.grid());
  ASSERT_EQ(g.values().size(), f.values().size());
  EXPECT_EQ(std::memcmp(g.values().data(), f.values().data(), f.values().size() * sizeof(double)), 0);
}

TEST(Snapshot, HeaderLayout) {
  SpacetimeField f(GridSpec{2, 4, 1}, 0.0);
  f.values()[0] = 1.0;
  const std::string b = snapshot_bytes(f);
  ASSERT_EQ(b.size(), 8u + 12u + 8u * f.values().size());
  EXPECT_EQ(b.substr(0, 8), "GSGE0001");
  EXPECT_EQ(b.substr(8, 4), std::string("\x02\x00\x00\x00", 4));
  EXPECT_EQ(b.substr(12, 4), std::string("\x04\x00\x00\x00", 4));
  EXPECT_EQ(b.substr(16, 4), std::string("\x01\x00\x00\x00", 4));
  // 1.0 = 0x3ff0000000000000, little-endian.
  EXPECT_EQ(b.substr(20, 8), std::string("\x00\x00\x00\x00\x00\x00\xf0\x3f", 8));
}

TEST(Snapshot, Errors) {
  const std::string good = snapshot_bytes(random_field(GridSpec{1, 4, 1}, 2));
  auto read = [](const std::string& bytes) {
    std::istringstream in(bytes, std::ios::binary);
    return read_snapshot(in);
  };
  auto message = [&](const std::string& bytes) {
    try {
      read(bytes);
    } catch (const IoError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  std::string bad = good;
  bad[0] = 'X';
  EXPECT_NE(message(bad).find("bad magic"), std::string::npos);
  std::string next = good;
  next[7] = '2';
  EXPECT_NE(message(next).find("unsupported snapshot version 2"), std::string::npos);
  EXPECT_NE(message(good.substr(0, good.size() - 3)).find("truncated"), std::string::npos);
  EXPECT_NE(message(good.substr(0, 10)).find("truncated"), std::string::npos);
  EXPECT_NE(message(good + "x").find("trailing"), std::string::npos);
  EXPECT_THROW(read_snapshot(fs::path("/nonexistent/file.gsge")), IoError);
}

TEST(Snapshot, FileRoundTrip) {
  const fs::path dir = scratch("snapshot");
  const SpacetimeField f = random_field(GridSpec{2, 4, 3}, 3);
  write_snapshot(f, dir / "f.gsge");
  EXPECT_EQ(snapshot_bytes(read_snapshot(dir / "f.gsge")), snapshot_bytes(f));
}

TEST(Config, ParsesSectionsAndDefaults) {
  const RunConfig cfg = parse_config(kManufactured, "/base");
  EXPECT_EQ(cfg.coeffs.k, 2);
  EXPECT_EQ(cfg.coeffs.gamma, 0.1);
  EXPECT_EQ(cfg.a.diagonal, 6.0);
  EXPECT_EQ(cfg.grid.nx, 8);
  EXPECT_EQ(cfg.grid.nt, 3);
  EXPECT_EQ(cfg.mode, "solve");
  EXPECT_EQ(cfg.seed, 3u);
  EXPECT_EQ(cfg.out_dir, fs::path("/base/out"));
  ASSERT_TRUE(cfg.psi.has_value());
  EXPECT_EQ(cfg.psi->kind, FieldSpec::Kind::manufactured);
  ASSERT_TRUE(cfg.manufactured.has_value());
  EXPECT_EQ(cfg.solver.newton_tol, 1e-9);
  EXPECT_EQ(cfg.deltas, (std::vector<double>{1e-2, 1e-3}));
}

TEST(Config, PresetAndRegularization) {
  const RunConfig cfg = parse_config(std::string(kGeodesic) + "\n", ".");
  EXPECT_EQ(cfg.coeffs.s, 1.0);
  EXPECT_EQ(cfg.coeffs.r, 1.0);
  EXPECT_EQ(cfg.coeffs.gamma, 0.0);
  EXPECT_EQ(cfg.u0->value, 0.3);
  EXPECT_EQ(cfg.solver.epsilon_schedule.size(), 3u);
  EXPECT_EQ(cfg.regularization, RegularizationMode::rhs_epsilon);

  const RunConfig g = parse_config(
      "problem: {n: 2, k: 1, r: 1, s: 1, u0: 0, u1: 0, psi: 0}\n"
      "solver: {regularization: gamma-epsilon}\n", ".");
  EXPECT_EQ(g.regularization, RegularizationMode::gamma_epsilon);
}

TEST(Config, ErrorsNameTheKey) {
  auto message = [](const std::string& text) {
    try {
      parse_config(text, ".");
    } catch (const std::invalid_argument& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("problem: {n: 2, k: 1, bogus: 1}").find("problem.bogus"), std::string::npos);
  EXPECT_NE(message("problem: {n: 2, k: two}").find("problem.k"), std::string::npos);
  EXPECT_NE(message("problem: {n: 2, k: 3}").find("k"), std::string::npos);
  EXPECT_NE(message("grid: {nx: 8}").find("problem"), std::string::npos);
  EXPECT_NE(message("problem: {n: 2, k: 1}\nsolver: {regularization: other}").find("regularization"),
            std::string::npos);
  EXPECT_NE(message("problem: {n: 2, k: 1, psi: {constant: 1, file: x}}").find("problem.psi"),
            std::string::npos);
  EXPECT_NE(message("problem: [1, 2").find("YAML"), std::string::npos);
  EXPECT_THROW(load_config("/nonexistent/config.yaml"), IoError);
}

TEST(Config, MissingU1NamesTheField) {
  const RunConfig cfg = parse_config("problem: {n: 2, k: 1, r: 1, s: 1, u0: 0, psi: 1}\n", ".");
  try {
    build_problem(cfg);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("u1"), std::string::npos);
  }
  std::ostringstream err;
  EXPECT_EQ(run(cfg, err), 2);
  EXPECT_NE(err.str().find("u1"), std::string::npos);
}

TEST(Files, ValuesAndTensors) {
  const fs::path dir = scratch("files");
  spit(dir / "v.txt", "# header\n1 2.5\n-3e-1 # trailing comment\n4\n");
  EXPECT_EQ(read_values_file(dir / "v.txt", 4), (std::vector<double>{1, 2.5, -0.3, 4}));
  EXPECT_THROW(read_values_file(dir / "v.txt", 5), InputError);
  spit(dir / "bad.txt", "1 two\n");
  try {
    read_values_file(dir / "bad.txt", 2);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
  }
  spit(dir / "a.txt", "1 0.5 2\n3 0 4\n");
  const auto a = read_tensor_file(dir / "a.txt", 2, 2);
  EXPECT_EQ(a[0](0, 1), 0.5);
  EXPECT_EQ(a[0](1, 0), 0.5);
  EXPECT_EQ(a[0](1, 1), 2.0);
  EXPECT_EQ(a[1](0, 0), 3.0);
}

TEST(Files, ConfigWithFileFields) {
  const fs::path dir = scratch("file_fields");
  std::string u0;
  for (int i = 0; i < 16; ++i) u0 += "0.25\n";
  spit(dir / "u0.txt", u0);
  std::string a;
  for (int i = 0; i < 16; ++i) a += "2 0 2\n";
  spit(dir / "a.txt", a);
  spit(dir / "c.yaml",
       "problem: {n: 2, k: 2, r: 1, s: 1, A: {file: a.txt}, u0: {file: u0.txt}, u1: 0.25, psi: 1}\n"
       "grid: {nx: 4, nt: 1}\n");
  const Problem p = build_problem(load_config(dir / "c.yaml"));
  EXPECT_EQ(p.u0[7], 0.25);
  EXPECT_EQ(p.a_field[3](1, 1), 2.0);
  EXPECT_EQ(p.psi.size(), 48u);
}

TEST(Logs, IterationLogAndNormTable) {
  SolveTrace t;
  t.records.push_back({"homotopy", std::nullopt, 0.5, 2, 1e-3, 0.25, 0.5, 0.0});
  t.records.push_back({"degenerate", 1e-2, 1.0, 0, 0.0, 1.0, 0.0, 0.0});
  std::ostringstream out;
  write_iteration_log(t, out);
  EXPECT_EQ(out.str(),
            "phase=homotopy tau=0.5 iter=2 residual_sup=0.001 min_margin=0.25 step_scale=0.5 wall_ms=0\n"
            "phase=degenerate tau=1 epsilon=0.01 iter=0 residual_sup=0 min_margin=1 step_scale=0 wall_ms=0\n");
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");

  DegenerateResult d;
  d.epsilons = {1e-1, 1e-2};
  d.norms.resize(2);
  d.consecutive_sup_diff = {0.5};
  std::ostringstream csv;
  write_norm_table(d, csv);
  EXPECT_EQ(csv.str(),
            "epsilon,sup_u,sup_ut,sup_grad_u,max_utt,sup_hess_u,sup_grad_ut,sup_diff_previous\n"
            "0.10000000000000001,0,0,0,0,0,0,\n"
            "0.01,0,0,0,0,0,0,0.5\n");
}

TEST(Run, InitWritesAdmissibleSnapshot) {
  const fs::path dir = scratch("init");
  ASSERT_EQ(run_text(kManufactured, dir, nullptr, "init"), 0);
  const SpacetimeField f = read_snapshot(dir / "out" / "init.gsge");
  EXPECT_EQ(f.grid().nx, 8);
  EXPECT_NE(slurp(dir / "out" / "summary.json").find("\"strictly_admissible\": true"), std::string::npos);
}

TEST(Run, SolveManufactured) {
  const fs::path dir = scratch("solve");
  std::string err;
  ASSERT_EQ(run_text(kManufactured, dir, &err), 0) << err;
  const fs::path out = dir / "out";
  EXPECT_TRUE(fs::exists(out / "solution.gsge"));
  const std::string log = slurp(out / "iterations.log");
  const auto last = log.rfind("residual_sup=", log.size() - 2);
  ASSERT_NE(last, std::string::npos);
  EXPECT_LE(std::stod(log.substr(last + 13)), 1e-9);
  const std::string summary = slurp(out / "summary.json");
  EXPECT_NE(summary.find("\"converged\": true"), std::string::npos);
  EXPECT_NE(summary.find("\"manufactured_error\""), std::string::npos);
  EXPECT_NE(slurp(out / "report.txt").find("check=trace_inequality status=PASS"), std::string::npos);
}

TEST(Run, SolveRejectsVanishingPsi) {
  const fs::path dir = scratch("solve_psi0");
  std::string err;
  EXPECT_EQ(run_text(kGeodesic, dir, &err, "solve"), 2);
  EXPECT_NE(err.find("psi"), std::string::npos);
}

TEST(Run, GeodesicAndVerify) {
  const fs::path dir = scratch("geodesic");
  std::string err;
  ASSERT_EQ(run_text(kGeodesic, dir, &err), 0) << err;
  const fs::path out = dir / "out";
  const std::string report = slurp(out / "report.txt");
  EXPECT_NE(report.find("check=viscosity_supersolution status=PASS"), std::string::npos) << report;
  EXPECT_NE(report.find("check=approximation_bounds[delta=0.01"), std::string::npos) << report;
  EXPECT_EQ(slurp(out / "eps_sweep.csv").substr(0, 8), "epsilon,");

  // Verify the written solution, then a corrupted copy of it.
  std::string verify = std::string(kGeodesic) + "  input: out/geodesic.gsge\n  samples: 500\n";
  verify.replace(verify.find("out: out"), 8, "out: verify");
  ASSERT_EQ(run_text(verify, dir, &err, "verify"), 0) << err;
  SpacetimeField bad = read_snapshot(out / "geodesic.gsge");
  bad(2, 5) += 0.1;
  write_snapshot(bad, out / "geodesic.gsge");
  EXPECT_EQ(run_text(verify, dir, &err, "verify"), 1);
  EXPECT_NE(slurp(dir / "verify" / "report.txt").find("check=max_principle_upper status=FAIL"),
            std::string::npos);
}

TEST(Run, SliceMode) {
  const fs::path dir = scratch("slice");
  std::string err;
  ASSERT_EQ(run_text(kManufactured, dir, &err, "slice"), 0) << err;
  const SpacetimeField f = read_snapshot(dir / "out" / "slice.gsge");
  const Problem p = fixture::manufactured_problem(8, 3);
  for (std::size_t x = 0; x < p.grid.spatial_size(); ++x) EXPECT_EQ(f(0, x), p.u0[x]);
  EXPECT_EQ(run_text(kGeodesic, dir, &err, "slice"), 2);
}

TEST(Run, DeterministicRunsAreByteIdentical) {
  const fs::path a = scratch("det_a");
  const fs::path b = scratch("det_b");
  ASSERT_EQ(run_text(kManufactured, a), 0);
  ASSERT_EQ(run_text(kManufactured, b), 0);
  for (const char* f : {"solution.gsge", "iterations.log", "report.txt", "summary.json"}) {
    EXPECT_EQ(slurp(a / "out" / f), slurp(b / "out" / f)) << f;
  }
}

#ifdef GSGE_CLI_PATH
TEST(Binary, ExitCodesAndMessages) {
  const fs::path dir = scratch("binary");
  spit(dir / "missing.yaml", "problem: {n: 2, k: 1, r: 1, s: 1, u0: 0, psi: 1}\n");
  const std::string exe = GSGE_CLI_PATH;
  auto sh = [&](const std::string& args) {
    const std::string cmd = "\"" + exe + "\" " + args + " > \"" + (dir / "stdout").string() +
                            "\" 2> \"" + (dir / "stderr").string() + "\"";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
  };
  EXPECT_EQ(sh("solve --config \"" + (dir / "missing.yaml").string() + "\""), 2);
  EXPECT_NE(slurp(dir / "stderr").find("u1"), std::string::npos);
  EXPECT_EQ(sh("solve"), 2);
  EXPECT_EQ(sh("frobnicate --config x"), 2);
  spit(dir / "m.yaml", kManufactured);
  EXPECT_EQ(sh("init --deterministic --config \"" + (dir / "m.yaml").string() + "\" --out \"" +
               (dir / "o").string() + "\""),
            0);
  EXPECT_TRUE(fs::exists(dir / "o" / "init.gsge"));
}
#endif
