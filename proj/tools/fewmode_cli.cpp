// fewmode_cli.cpp — scenario runner: run / validate / presets subcommands
// emitting deterministic per-engine CSV time series

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fewmode/scenario.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string default_out_dir() {
  const char* env = std::getenv("FEWMODE_OUT_DIR");
  return env && *env ? env : ".";
}

fewmode::ScenarioConfig load_config(const std::string& config_path,
                                    const std::string& preset_name) {
  if (!config_path.empty()) return fewmode::parse_config(read_file(config_path));
  const fewmode::Preset* p = fewmode::find_preset(preset_name);
  if (!p) throw std::runtime_error("unknown preset: " + preset_name);
  return p->config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"discrete-mode open-system wave-packet dynamics"};
  app.require_subcommand(1);

  std::string config_path, preset_name, out_dir = default_out_dir(), engines_csv;
  int threads = 1;
  bool gnuplot = false;

  CLI::App* run = app.add_subcommand("run", "run a scenario and write per-engine CSV files");
  run->add_option("--config", config_path, "path to a scenario config file");
  run->add_option("--preset", preset_name, "name of a built-in preset");
  run->add_option("--out", out_dir, "output directory (default: FEWMODE_OUT_DIR or '.')");
  run->add_option("--engines", engines_csv, "comma-separated engine override");
  run->add_option("--threads", threads, "run engines concurrently when > 1");
  run->add_flag("--gnuplot", gnuplot, "also emit a gnuplot script stub");

  std::string validate_path;
  CLI::App* validate = app.add_subcommand("validate", "check a config file and list problems");
  validate->add_option("--config", validate_path, "path to a scenario config file")->required();

  CLI::App* presets_cmd = app.add_subcommand("presets", "list built-in presets");
  std::string show_name;
  presets_cmd->add_option("--show", show_name, "print the config text of one preset");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      if (config_path.empty() == preset_name.empty()) {
        std::cerr << "run: exactly one of --config or --preset is required\n";
        return 1;
      }
      fewmode::ScenarioConfig cfg = load_config(config_path, preset_name);
      if (!engines_csv.empty()) {
        cfg.engines.clear();
        std::stringstream ss(engines_csv);
        std::string item;
        while (std::getline(ss, item, ',')) {
          const auto a = item.find_first_not_of(" \t");
          const auto b = item.find_last_not_of(" \t");
          if (a != std::string::npos) cfg.engines.push_back(item.substr(a, b - a + 1));
        }
      }
      const auto outs = fewmode::run_scenario(cfg, out_dir, threads, gnuplot);
      for (const auto& o : outs) std::cout << o.engine << ": " << o.path << "\n";
      return 0;
    }

    if (validate->parsed()) {
      fewmode::ScenarioConfig cfg = fewmode::parse_config(read_file(validate_path));
      const auto bad = fewmode::validate_config(cfg);
      if (bad.empty()) {
        std::cout << "ok\n";
        return 0;
      }
      for (const auto& b : bad) std::cout << b << "\n";
      return 2;
    }

    if (presets_cmd->parsed()) {
      if (!show_name.empty()) {
        const fewmode::Preset* p = fewmode::find_preset(show_name);
        if (!p) {
          std::cerr << "unknown preset: " << show_name << "\n";
          return 1;
        }
        std::cout << fewmode::serialize_config(p->config);
        return 0;
      }
      for (const auto& p : fewmode::presets())
        std::cout << p.name << "  —  " << p.description << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
