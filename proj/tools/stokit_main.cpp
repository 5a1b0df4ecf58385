// stokit: transformation-optics design and verification experiments.
//
//   stokit <kind> [--config file] [--out path] [--set section.key=value ...]
//   stokit validate --config file
//
// Subcommands mirror the experiment kinds; flags override config-file values.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cli.hpp"
#include "sto/errors.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_path;
  int threads = 0;       // 0: take from config / default 1
  double tol = 0;        // 0: take from config / default 1e-10
  long long seed = -1;   // <0: take from config / default
  std::vector<std::string> overrides;  // section.key=value
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "configuration file (key = value sections)");
  cmd->add_option("--out", args.out_path, "output data file path");
  cmd->add_option("--threads", args.threads, "worker pool size for sweeps");
  cmd->add_option("--tol", args.tol, "solver / integrator relative tolerance");
  cmd->add_option("--seed", args.seed, "seed for randomized ray fans");
  cmd->add_option("--set", args.overrides,
                  "override a config value, e.g. --set params.omega=2.0");
}

sto::cli::ExperimentConfig build_config(const std::string& kind, const CommonArgs& args) {
  sto::cli::ExperimentConfig cfg;
  cfg.kind = kind;
  if (!args.config_path.empty()) cfg.raw = sto::cli::Config::parse_file(args.config_path);
  std::string cfg_kind = cfg.raw.get_string("experiment", "kind", kind);
  if (!kind.empty() && cfg_kind != kind && cfg.raw.has("experiment", "kind"))
    throw sto::ParameterError("config: file kind '" + cfg_kind +
                              "' disagrees with subcommand '" + kind + "'");
  cfg.kind = kind.empty() ? cfg_kind : kind;

  for (const auto& ov : args.overrides) {
    auto eq = ov.find('=');
    auto dot = ov.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
      throw sto::ParameterError("--set expects section.key=value, got '" + ov + "'");
    cfg.raw.set(ov.substr(0, dot), ov.substr(dot + 1, eq - dot - 1), ov.substr(eq + 1));
  }

  std::string out = !args.out_path.empty()
                        ? args.out_path
                        : cfg.raw.get_string("output", "path", "");
  if (!out.empty() && out.front() != '/') {
    if (const char* dir = std::getenv("STOKIT_OUT_DIR")) out = std::string(dir) + "/" + out;
  }
  cfg.out_path = out;
  cfg.threads = args.threads > 0 ? args.threads : cfg.raw.get_int("params", "threads", 1);
  cfg.tol = args.tol > 0 ? args.tol : cfg.raw.get_double("params", "tol", 1e-10);
  cfg.seed = args.seed >= 0 ? static_cast<unsigned>(args.seed)
                            : static_cast<unsigned>(cfg.raw.get_int("params", "seed",
                                                                    20260808));
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stokit: transformation-optics cloaking and wormhole experiments"};
  app.require_subcommand(1);

  const std::vector<std::string> kinds = {"design-dump",     "dn-spectrum",
                                          "cloak-converge",  "quantum-converge",
                                          "trapped-scan",    "rays",
                                          "wormhole-rays"};
  std::map<std::string, CommonArgs> args_by_kind;
  for (const auto& kind : kinds) {
    auto* cmd = app.add_subcommand(kind, "run the " + kind + " experiment");
    add_common(cmd, args_by_kind[kind]);
  }
  CommonArgs validate_args;
  auto* vcmd = app.add_subcommand("validate", "check a configuration without running");
  add_common(vcmd, validate_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (vcmd->parsed()) {
      auto cfg = build_config("", validate_args);
      if (cfg.out_path.empty()) cfg.out_path = "(unset)";
      for (const auto& line : sto::cli::validate_report(cfg)) std::cout << line << "\n";
      return 0;
    }
    for (const auto& kind : kinds) {
      if (app.get_subcommand(kind)->parsed()) {
        auto cfg = build_config(kind, args_by_kind[kind]);
        auto files = sto::cli::run_experiment(cfg);
        for (const auto& f : files) std::cout << "wrote " << f << "\n";
        return 0;
      }
    }
  } catch (const std::exception& e) {
    int code = sto::cli::exit_code_for_current_exception();
    std::cerr << "error: " << e.what() << "\n";
    return code;
  }
  return 0;
}
