// Experiment runner. `run <config>` executes the experiments selected in the
// config and writes one CSV per experiment plus summary.json to --out.
// CARNOT_THREADS caps the worker threads; results are identical for any value.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "carnot/carnot.hpp"

int main(int argc, char** argv) {
  CLI::App app{"nonlocal horizontal-gradient experiments on Carnot groups"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  auto* run = app.add_subcommand("run", "run the experiments selected in a config file");
  run->add_option("config", config_path, "key = value config file")->required();
  run->add_option("--out", out_dir, "output directory for CSV tables and summary.json");

  auto* list = app.add_subcommand("list-experiments", "list available experiments");

  std::string describe_name;
  auto* describe = app.add_subcommand("describe", "describe one experiment and its CSV columns");
  describe->add_option("experiment", describe_name, "experiment name")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) {
      for (const auto& [name, desc] : carnot::experiment_descriptions()) std::cout << name << "\n";
      return 0;
    }
    if (describe->parsed()) {
      const auto& all = carnot::experiment_descriptions();
      const auto it = all.find(describe_name);
      if (it == all.end()) {
        std::cerr << "unknown experiment: " << describe_name << "\n";
        return 2;
      }
      std::cout << it->first << "\n" << it->second << "\n";
      return 0;
    }
    carnot::ExperimentConfig cfg = carnot::parse_config_file(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (cfg.experiments.empty()) {
      std::cerr << "config selects no experiments (set `experiments = name1, name2`)\n";
      return 2;
    }
    const bool ok = carnot::run_all(cfg, std::cout);
    return ok ? 0 : 1;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
}
