// aedopt: learn-then-optimize AED placement pipeline.
//
// Subcommands run individual stages against a key=value config file; the
// `pipeline` subcommand chains them. Flags override config keys. Exit is
// non-zero on failure, with the failing stage named on stderr.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aedopt/config.hpp"
#include "aedopt/pipeline.hpp"

using aedopt::RunConfig;

int main(int argc, char** argv) {
  CLI::App app{"AED placement by learn-then-optimize: predict, attribute, optimize, evaluate"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir_flag;
  int64_t seed_flag = -1;
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_path, "Run configuration file")->required();
  app.add_option("--out-dir", out_dir_flag, "Override the output directory");
  app.add_option("--seed", seed_flag, "Override the master seed");
  app.add_option("--set", overrides, "Override a config key (key=value)");

  struct Cmd {
    const char* name;
    const char* help;
    void (*fn)(const RunConfig&);
  };
  const Cmd cmds[] = {
      {"grid", "Build the hexagonal grid and export it as GeoJSON", aedopt::run_grid},
      {"synth", "Generate a seeded synthetic city", aedopt::run_synth},
      {"ingest", "Bin sites and incidents into the per-cell matrix", aedopt::run_ingest},
      {"train", "Fit the risk regression model", aedopt::run_train},
      {"explain", "Attribute predictions to features and sites", aedopt::run_explain},
      {"score", "Sample candidates and compute their densities", aedopt::run_score},
      {"optimize", "Solve the spacing-constrained selection", aedopt::run_optimize},
      {"evaluate", "Score a plan on historical incidents", aedopt::run_evaluate},
      {"sweep", "Sensitivity sweep over N and D_min", aedopt::run_sweep},
      {"pipeline", "Run every stage in order", aedopt::run_pipeline},
  };
  for (const auto& c : cmds) app.add_subcommand(c.name, c.help)->fallthrough();

  CLI11_PARSE(app, argc, argv);

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    RunConfig cfg = RunConfig::from_file(config_path);
    if (!out_dir_flag.empty()) cfg.set("out_dir", out_dir_flag);
    if (seed_flag >= 0) cfg.set("seed", std::to_string(seed_flag));
    for (const auto& kv : overrides) {
      size_t eq = kv.find('=');
      if (eq == std::string::npos) {
        std::cerr << "error: --set expects key=value, got '" << kv << "'\n";
        return 2;
      }
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    for (const auto& c : cmds) {
      if (cmd == c.name) {
        c.fn(cfg);
        return 0;
      }
    }
    std::cerr << "error: unknown command '" << cmd << "'\n";
    return 2;
  } catch (const aedopt::StageError& e) {
    std::cerr << "error [stage=" << e.stage << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error [stage=" << cmd << "]: " << e.what() << "\n";
    return 1;
  }
}
