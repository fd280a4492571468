#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pushforward/errors.hpp"
#include "pushforward/experiment.hpp"

namespace fs = std::filesystem;

namespace {

// PFMAP_OUT_DIR overrides the output directory (and nothing else).
fs::path resolve_out_dir(const std::string& from_config, const std::string& from_flag) {
  if (const char* env = std::getenv("PFMAP_OUT_DIR")) return fs::path(env);
  if (!from_flag.empty()) return fs::path(from_flag);
  return fs::path(from_config);
}

int run_one(const fs::path& config_path, const std::string& out_flag) {
  pf::ExperimentConfig cfg = pf::load_config_file(config_path);
  fs::path out = resolve_out_dir(cfg.output_dir, out_flag);
  pf::run_experiment(cfg, out, std::cout);
  if (cfg.kind == "reproduce-fig1") {
    // the figure run carries its own acceptance gate
    std::ifstream report(out / "report.json");
    nlohmann::json j;
    report >> j;
    if (!j["final"]["passed"].get<bool>()) {
      std::cerr << "reproduce-fig1: W1 = " << j["final"]["w1"].get<double>()
                << " exceeds threshold " << j["final"]["w1_threshold"].get<double>() << "\n";
      return 1;
    }
  }
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pushforward-map experiment driver"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;

  CLI::App* run = app.add_subcommand("run", "run one experiment from a config file");
  run->add_option("config", config_path, "JSON experiment config")->required();
  run->add_option("--out", out_dir, "output directory (overrides the config)");

  CLI::App* fig1 = app.add_subcommand("reproduce-fig1",
                                      "train the default Gaussian-to-uniform map and emit the "
                                      "learned map next to the Gaussian CDF");
  fig1->add_option("--seed", seed, "run seed")->default_val(1);
  fig1->add_option("--out", out_dir, "output directory")->default_str("out-fig1");

  CLI::App* suite = app.add_subcommand("suite", "run every *.json config in a directory");
  suite->add_option("dir", config_path, "directory of configs")->required();

  CLI::App* validate = app.add_subcommand("validate", "parse and validate a config file");
  validate->add_option("config", config_path, "JSON experiment config")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_one(config_path, out_dir);
    if (fig1->parsed()) {
      fs::path out = resolve_out_dir(out_dir.empty() ? "out-fig1" : out_dir, out_dir);
      pf::Fig1Result res = pf::reproduce_fig1(seed, out, std::cout);
      if (!res.passed) {
        std::cerr << "reproduce-fig1: W1 = " << res.w1 << " exceeds threshold "
                  << res.threshold << "\n";
        return 1;
      }
      std::cout << "wrote " << out.string() << "\n";
      return 0;
    }
    if (suite->parsed()) {
      std::vector<fs::path> configs;
      for (const auto& entry : fs::directory_iterator(config_path))
        if (entry.path().extension() == ".json") configs.push_back(entry.path());
      std::sort(configs.begin(), configs.end());
      if (configs.empty()) {
        std::cerr << "suite: no *.json configs in " << config_path << "\n";
        return 2;
      }
      int rc = 0;
      for (const auto& c : configs) {
        std::cout << "== " << c.filename().string() << " ==\n";
        pf::ExperimentConfig cfg = pf::load_config_file(c);
        fs::path out = resolve_out_dir(cfg.output_dir, "");
        pf::run_experiment(cfg, out, std::cout);
      }
      return rc;
    }
    if (validate->parsed()) {
      pf::load_config_file(config_path);
      std::cout << "ok\n";
      return 0;
    }
  } catch (const pf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
