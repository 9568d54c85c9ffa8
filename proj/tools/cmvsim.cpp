#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "cmv/errors.hpp"
#include "cmv/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Particle simulator for McKean-Vlasov equations with common noise"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::string out_dir;
  std::string claim;
  app.add_option("--config", config_path, "INI configuration file")->required()->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "master seed (overrides run.master_seed)");
  app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "output directory (overrides run.output_dir)");

  app.add_subcommand("simulate", "particle trajectories, one CSV per realization");
  app.add_subcommand("couple", "coupled runs, Theta statistics and decay fit");
  app.add_subcommand("metric", "distance profile and certified contraction rate");
  auto* verify = app.add_subcommand("verify", "check a claim; exit 1 on violation");
  verify->add_option("claim", claim, "variance-bound | ou-variance | counterexample");
  app.add_subcommand("sweep", "multiplicity statistic over (sigma, sigma0, alpha)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : cmv::kExitConfig;
  }

  const std::string subcommand = app.get_subcommands().front()->get_name();
  try {
    std::ifstream in(config_path);
    std::stringstream text;
    text << in.rdbuf();
    const cmv::RunConfig config = cmv::parse_config(text.str(), seed);
    cmv::RunnerOptions options;
    options.workers = workers;
    options.out_dir = out_dir;
    options.log = &std::cout;
    return cmv::run_subcommand(subcommand, config, options, claim);
  } catch (const cmv::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return cmv::kExitConfig;
  } catch (const cmv::NumericalFault& e) {
    std::cerr << "numerical fault: " << e.what() << '\n';
    return cmv::kExitFault;
  } catch (const cmv::ProfileError& e) {
    std::cerr << "profile error: " << e.what() << '\n';
    return cmv::kExitFault;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cmv::kExitConfig;
  }
}
