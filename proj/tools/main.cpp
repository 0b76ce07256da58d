#include "cli/commands.hpp"
#include "cli/config.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace needlets::cli;

  CLI::App app{"Spherical needlet analysis of isotropic Gaussian fields"};
  app.require_subcommand(1);

  struct Args {
    std::string config;
    std::string out;
    std::vector<std::string> overrides;
    int workers = 0;
  };
  std::map<std::string, Args> args;
  const std::map<std::string, std::string> help = {
      {"filter", "Window profile, per-scale weights and the partition-of-unity check"},
      {"simulate", "Simulate a Gaussian field and write its harmonic coefficients"},
      {"transform", "Needlet coefficients of a simulated or given field"},
      {"corr", "Within-scale decay diagnostics and cross-scale correlation"},
      {"gof", "Hermite goodness-of-fit test with the sup|W| statistic"},
      {"mask", "Masked-sky discrepancy experiment"},
  };
  for (const auto& name : command_names()) {
    auto& a = args[name];
    auto* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("--config", a.config, "Key = value configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", a.out, "Output directory")->required();
    sub->add_option("--set", a.overrides, "Override a config entry, key=value");
    sub->add_option("--workers", a.workers, "Worker threads (overrides the config)")->check(CLI::Range(1, 1024));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  for (const auto& name : command_names()) {
    if (!app.got_subcommand(name)) continue;
    const auto& a = args[name];
    try {
      Config cfg = Config::load(a.config);
      for (const auto& kv : a.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw needlets::InvalidArgument("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
      }
      if (a.workers > 0) cfg.set("workers", std::to_string(a.workers));
      run_command(name, cfg, a.out, std::cout);
      return kExitOk;
    } catch (const std::exception& e) {
      std::cerr << "needlets " << name << ": error: " << e.what() << '\n';
      return exit_code_for(e);
    }
  }
  return kExitInternal;
}
