#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stablefk/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Feynman-Kac experiments for stable processes with local and jump perturbations"};
  app.require_subcommand(1);

  stablefk::CommandOptions opt;
  std::uint64_t seed = 0;
  int paths = 0;
  std::vector<CLI::Option*> seed_opts, path_opts;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "run configuration (sectioned key = value)")->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out_dir, "output directory");
    seed_opts.push_back(sub->add_option("--seed", seed, "master seed, overrides the config"));
    path_opts.push_back(
        sub->add_option("--paths", paths, "number of paths for every estimator")->check(CLI::PositiveNumber));
    sub->add_flag("--quiet", opt.quiet, "no progress output");
  };

  auto* assemble = app.add_subcommand("assemble", "assemble the discrete forms and write a cache");
  auto* groundstate = app.add_subcommand("groundstate", "solve for lambda and the ground state");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo gauge estimates at the probes");
  auto* gauge = app.add_subcommand("gauge", "theta(D) and the gauge predicate");
  auto* verify = app.add_subcommand("verify", "run the verification suite");
  for (auto* s : {assemble, groundstate, simulate, gauge, verify}) add_common(s);
  groundstate->add_option("--cache", opt.cache_path, "read the system from an assemble cache")
      ->check(CLI::ExistingFile);
  verify->add_option("--check", opt.checks, "run only these checks (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : stablefk::kConfigFailure;
  }
  for (auto* o : seed_opts) {
    if (o->count() > 0) opt.seed = seed;
  }
  for (auto* o : path_opts) {
    if (o->count() > 0) opt.paths = paths;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  return stablefk::run_command(name, opt, std::cout, std::cerr);
}
