#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <utility>

#include "hessiancone/commands.hpp"

int main(int argc, char** argv) {
  using namespace hessiancone;
  CLI::App app{"Finite-difference experiments for Hessian equations on cones"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  std::string config_path;
  std::uint64_t seed = 1;
  std::string out = ".";
  std::string profile = "fast";
  const std::pair<const char*, const char*> commands[] = {
      {"lemma-sweep", "arrowhead eigenvalue concentration sweeps and deflation"},
      {"cone-check", "structure checks for the symmetric functions"},
      {"solve", "trivial, manufactured or real-Hessian Dirichlet solves"},
      {"boundary-scaling", "boundary Hessian ratio over scaled boundary data"},
      {"degenerate", "solves as the right-hand side approaches the cone boundary"},
  };
  for (const auto& [name, about] : commands) {
    CLI::App* sub = app.add_subcommand(name, about);
    sub->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "random seed")->capture_default_str();
    sub->add_option("--out", out, "output directory")->capture_default_str();
    sub->add_option("--profile", profile, "fast or full")->check(CLI::IsMember({"fast", "full"}))->capture_default_str();
  }
  CLI11_PARSE(app, argc, argv);

  try {
    const Config cfg = config_path.empty() ? Config{} : Config::load(config_path);
    commands::RunOptions opt;
    opt.seed = seed;
    opt.out = out;
    opt.profile = commands::parse_profile(profile);
    return commands::run(app.get_subcommands().front()->get_name(), cfg, opt);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
