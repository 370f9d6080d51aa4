#include "gsge/cli_io.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Solver and verifier for sigma_k geodesic-type equations on flat tori"};
  app.require_subcommand(1);
  gsge::CliOptions opts;
  std::string out;
  std::uint64_t seed = 0;
  for (const char* mode : {"init", "solve", "geodesic", "slice", "verify"}) {
    auto* sub = app.add_subcommand(mode, std::string("run mode '") + mode + "'");
    sub->add_option("--config", opts.config, "YAML config file")->required();
    sub->add_option("--out", out, "output directory (overrides run.out)");
    sub->add_option("--seed", seed, "random seed (overrides run.seed)");
    sub->add_flag("--deterministic", opts.deterministic, "single worker, zeroed wall-clock fields");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  for (auto* sub : app.get_subcommands()) {
    opts.mode = sub->get_name();
    if (sub->count("--out") > 0) opts.out = out;
    if (sub->count("--seed") > 0) opts.seed = seed;
  }
  return gsge::run(opts, std::cerr);
}
