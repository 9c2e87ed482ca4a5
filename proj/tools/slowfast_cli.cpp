#include <CLI11.hpp>
#include <iostream>

#include "slowfast/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Slow-fast stochastic systems: hypothesis checks, manifold reduction and filtering"};
  app.require_subcommand(1);

  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  unsigned threads = 1;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "scenario YAML (built-in thermoelastic scenario when omitted)")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "master seed (overrides run.seed)");
    sub->add_option("--out", out, "output directory (overrides run.output_dir)");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  };
  add_common(app.add_subcommand("check", "verify (H1)-(H5) and the (mu, epsilon0) window"));
  add_common(app.add_subcommand("simulate", "full and reduced trajectories with their gap"));
  add_common(app.add_subcommand("filter", "full and reduced filters, epsilon scaling and martingale checks"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : slowfast::kExitUsage;
  }

  const CLI::App* sub = app.get_subcommands().front();
  slowfast::CommandOptions opts;
  if (sub->count("--seed") > 0) opts.seed = seed;
  if (sub->count("--out") > 0) opts.out_dir = out;
  opts.threads = threads;
  return slowfast::run_command(sub->get_name(), config, opts, std::cout, std::cerr);
}
