#pragma once

#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lulc/pipeline/config.hpp"
#include "lulc/pipeline/stages.hpp"

namespace lulc::pipeline {

/// Short spellings accepted next to the full dotted key.
inline const std::map<std::string, std::string>& flag_aliases() {
  static const std::map<std::string, std::string> aliases = {
      {"train.lr", "--lr"},       {"infer.tau", "--tau"},          {"paths.work_dir", "--work-dir"},
      {"train.max_epochs", "--epochs"}, {"bench.device", "--device"},
  };
  return aliases;
}

inline const std::vector<std::pair<std::string, std::string>>& subcommands() {
  static const std::vector<std::pair<std::string, std::string>> subs = {
      {"synth", "generate synthetic scenes, ground truth and a catalog"},
      {"ingest", "filter the scene catalog by cloud cover and date window"},
      {"tile", "mask and cut ingested scenes into the chip archive"},
      {"stats", "per-channel mean and standard deviation of the chips"},
      {"split", "stratified train/val/test split of the labelled chips"},
      {"train", "train the residual classifier with early stopping"},
      {"eval", "confusion matrix and accuracies on the test split"},
      {"infer", "classify one scene into a suppressed, smoothed class raster"},
      {"bench", "time training, validation and inference on this host"},
      {"report", "combine bench runs into speed-up and chart reports"},
      {"map", "GeoJSON and interactive HTML map of the class raster"},
      {"run", "every stage in order"},
      {"config", "validate the configuration and print every effective value"},
  };
  return subs;
}

/// Builds the effective configuration: defaults, then the config file, then
/// LULC_SEED (seed only), then command-line flags.
inline PipelineConfig resolve_config(const std::string& config_path, const std::vector<std::pair<std::string, std::string>>& flags,
                                     const char* env_seed) {
  PipelineConfig cfg;
  ConfigIssues issues;
  std::string source = "command line";
  if (!config_path.empty()) {
    if (!std::filesystem::exists(config_path)) throw ConfigError("configuration file not found: " + config_path);
    apply_yaml(cfg, read_text_file(config_path), config_path, issues);
    source = config_path;
  }
  const bool seed_flag = std::any_of(flags.begin(), flags.end(), [](const auto& f) { return f.first == "seed"; });
  if (env_seed && *env_seed && !seed_flag) {
    try {
      find_key("seed")->set(cfg, env_seed);
    } catch (const Error& e) {
      issues.add(std::string("LULC_SEED: ") + e.what());
    }
  }
  for (const auto& [key, value] : flags) {
    try {
      find_key(key)->set(cfg, value);
    } catch (const Error& e) {
      issues.add(std::string(e.what()) + " (flag --" + key + ")");
    }
  }
  check_config(cfg, issues);
  if (!issues.ok()) issues.raise(source);
  return cfg;
}

/// Entry point of the `lulc` tool. Returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Land-use / land-cover pipeline: ingest, tile, train, evaluate, infer, benchmark and map.", "lulc"};
  app.require_subcommand(1, 1);
  app.footer(
      "Precedence: built-in defaults < --config file < LULC_SEED (seed only) < flags.\n"
      "Exit codes: 0 ok, 1 internal, 2 invalid argument, 3 config, 4 missing artifact, 5 I/O,\n"
      "6 format, 7 truncated file, 8 version, 9 shape, 10 index, 11 numerical.");

  std::string config_path;
  app.add_option("-c,--config", config_path, "YAML configuration file");

  std::vector<std::string> values(config_keys().size());
  std::vector<CLI::Option*> options;
  for (std::size_t i = 0; i < config_keys().size(); ++i) {
    const auto& k = config_keys()[i];
    std::string names = "--" + k.key;
    if (auto a = flag_aliases().find(k.key); a != flag_aliases().end()) names = a->second + "," + names;
    auto* opt = app.add_option(names, values[i], k.help);
    opt->type_name(k.type);
    options.push_back(opt);
  }

  std::string chosen;
  for (const auto& [name, help] : subcommands()) {
    auto* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    sub->callback([&chosen, n = name] { chosen = n; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "lulc: error: " << e.what() << "\n";
    return exit_code(ErrorKind::invalid_argument);
  }

  try {
    std::vector<std::pair<std::string, std::string>> flags;
    for (std::size_t i = 0; i < options.size(); ++i)
      if (options[i]->count() > 0) flags.emplace_back(config_keys()[i].key, values[i]);
    auto cfg = resolve_config(config_path, flags, std::getenv("LULC_SEED"));
    if (chosen == "config") {
      out << config_yaml(cfg);
      return 0;
    }
    RunContext ctx(std::move(cfg), &err);
    if (chosen == "run") run_all(ctx);
    else run_stage(ctx, chosen);
    return 0;
  } catch (const Error& e) {
    err << "lulc " << chosen << ": error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "lulc " << chosen << ": internal error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace lulc::pipeline
