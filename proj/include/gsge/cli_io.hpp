#pragma once

// Configuration files, field snapshots, logs and the command-line driver.

#include "gsge/analytic.hpp"
#include "gsge/grid.hpp"
#include "gsge/solver.hpp"
#include "gsge/verifier.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gsge {

/// Source of a scalar field: a constant, a closed-form trig field, a text
/// file, or the manufactured solution of the config.
struct FieldSpec {
  enum class Kind { constant, trig, file, manufactured };
  Kind kind = Kind::constant;
  double value = 0.0;
  TrigField trig;
  std::filesystem::path path;
};

struct TensorSpec {
  bool from_file = false;
  double diagonal = 1.0;  // A = diagonal * I
  std::filesystem::path path;
};

struct RunConfig {
  Coefficients coeffs;
  std::optional<std::string> preset;
  double preset_tau = 0.0;
  GridSpec grid;
  TensorSpec a;
  std::optional<FieldSpec> psi;
  std::optional<FieldSpec> u0;
  std::optional<FieldSpec> u1;
  std::optional<TrigField> manufactured;
  SolverOptions solver;
  RegularizationMode regularization = RegularizationMode::rhs_epsilon;

  std::string mode = "solve";
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "out";
  std::optional<std::filesystem::path> input;  // snapshot to verify
  std::vector<double> deltas{1e-2, 1e-3};
  std::size_t viscosity_trials = 1000;
  std::size_t samples = 10000;  // algebraic sweeps in verify mode
  bool write_jacobian = false;

  /// Directory that relative file paths in the config resolve against.
  std::filesystem::path base_dir = ".";
};

/// Parses a YAML config. Throws ParameterError / InputError naming the
/// offending key, IoError when the file cannot be read.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");

/// Assembles and validates the discrete problem (missing u0/u1/psi specs,
/// sizes, symmetry, cone membership, psi >= 0).
Problem build_problem(const RunConfig& cfg);

/// Whitespace-separated numbers, '#' starts a comment. Throws InputError
/// when the count differs from `expected`.
std::vector<double> read_values_file(const std::filesystem::path& path, std::size_t expected);

/// Per spatial node the upper triangle of A, row by row.
std::vector<SymMatrix> read_tensor_file(const std::filesystem::path& path, int n,
                                        std::size_t nodes);

inline constexpr char kSnapshotMagic[] = "GSGE";
inline constexpr int kSnapshotVersion = 1;

/// 8-byte magic "GSGE0001", u32 LE n, nx, nt, then f64 LE values.
void write_snapshot(const SpacetimeField& field, std::ostream& out);
void write_snapshot(const SpacetimeField& field, const std::filesystem::path& path);
SpacetimeField read_snapshot(std::istream& in);
SpacetimeField read_snapshot(const std::filesystem::path& path);

/// One key=value record per line.
void write_iteration_log(const SolveTrace& trace, std::ostream& out);

/// Norm-vs-epsilon table of an epsilon sweep, with a header row.
void write_norm_table(const DegenerateResult& result, std::ostream& out);

/// %.17g formatting used by every text output.
std::string format_double(double v);

struct CliOptions {
  std::string mode;
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
};

/// Runs one subcommand. Returns 0 on success, 1 on solver or verification
/// failure, 2 on configuration or validation errors; messages go to `err`.
int run(const CliOptions& cli, std::ostream& err);
int run(const RunConfig& cfg, std::ostream& err);

}  // namespace gsge
