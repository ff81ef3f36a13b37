// SPDX-License-Identifier: Apache-2.0
//
// greenmat <solve|green|heatkernel|verify|fundamental> --config <path>
//          [--out <dir>] [--threads <n>] [--seed <n>]
#include <iostream>

#include <CLI11.hpp>

#include "greenmat/error.hpp"
#include "greenmat/io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Green's matrices of elliptic systems with rough coefficients"};
  app.require_subcommand(1, 1);
  std::string config;
  greenmat::CommandOptions opt;
  std::uint64_t seed = 0;
  const char* help[][2] = {{"solve", "solve L u = -f for a constant source"},
                           {"green", "Green columns at the configured sources"},
                           {"heatkernel", "heat-kernel runs, L2 histories and slice dumps"},
                           {"verify", "estimate reports; exit 1 if any fails"},
                           {"fundamental", "renormalized whole-plane fundamental matrix on a grid"}};
  for (const auto& h : help) {
    CLI::App* sub = app.add_subcommand(h[0], h[1]);
    sub->add_option("--config", config, "INI run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out_dir, "output directory")->capture_default_str();
    sub->add_option("--threads", opt.threads, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "overrides run.seed");
  }
  CLI11_PARSE(app, argc, argv);
  opt.command = app.get_subcommands().front()->get_name();
  if (app.get_subcommands().front()->count("--seed")) opt.seed = seed;
  try {
    const greenmat::RunConfig cfg = greenmat::RunConfig::load(config);
    return greenmat::run_command(cfg, opt, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
