#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace tumorctl::cli;
  CLI::App app{"tumorctl: optimal control of the four-field tumor model"};
  app.require_subcommand(1);

  Options opt;
  const char* names[][2] = {
      {"simulate", "forward solve, snapshots and invariant report"},
      {"gradient-check", "Taylor test and adjoint gradient against finite differences"},
      {"optimize", "projected gradient descent with history and VI report"},
      {"separation", "damage separation bounds and post-hoc check"},
      {"hypothesis-check", "sample the structural hypotheses of the model"},
  };
  for (const auto& [name, help] : names) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config_path, "key = value run configuration")->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out_dir, "output directory (overrides output.dir)");
    sub->add_option("--refine", opt.refine, "double (or halve, if negative) grid and steps N times")
        ->check(CLI::Range(-4, 4));
    sub->add_flag("--oracle", opt.oracle, "compare against the ODE reduction (simulate)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfigError;
  }
  return run(app.get_subcommands().front()->get_name(), opt, std::cout, std::cerr);
}
