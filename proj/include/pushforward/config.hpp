#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pushforward/curriculum.hpp"
#include "pushforward/densfit.hpp"
#include "pushforward/distributions.hpp"
#include "pushforward/mlp.hpp"
#include "pushforward/train.hpp"

namespace pf {

struct ModelConfig {
  std::vector<std::size_t> layers = {1, 32, 32, 1};
  Activation hidden = Activation::Tanh;
  OutputActivation output = OutputActivation::Identity;
};

struct OptimizerConfig {
  std::string algorithm = "adam";  // "adam" | "sgd"
  AdamConfig adam;
  double momentum = 0.0;
  std::size_t epochs = 5000;
  std::size_t batch = 512;
};

struct FlowConfig {
  std::string potential = "quadratic";
  double t_end = 1.0;
  double dt = 1e-3;
  int steps = 200;       // reverse-transport RK4 steps
  double horizon = 12.0; // reverse integration start time
  std::size_t particles = 10000;
  double t_floor = 1e-3; // reverse stop time for empirical-closure states
};

struct CurriculumConfig {
  std::vector<double> times;  // explicit; empty = geometric(t0, ratio, stages)
  double t0 = 4.0;
  double ratio = 0.5;
  std::size_t stages = 8;
  std::size_t epochs_per_stage = 2000;
  int retry_cap = 3;
  double threshold = 0.05;
};

struct NllConfig {
  std::size_t hidden = 16;
  int max_epochs = 1500;
};

struct ElboConfig {
  double loading = 1.0;
  double x = 0.5;
  double init_mean = 1.0;
  double init_var = 1.0;
};

struct ExperimentConfig {
  std::string kind;  // train-statmatch | train-nll | train-elbo | simulate-flow |
                     // curriculum | compare | reproduce-fig1
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  DistributionSpec base = StdGaussian{1};
  DistributionSpec target = Uniform{0.0, 1.0};
  ObjectiveConfig objective;
  ModelConfig model;
  OptimizerConfig optimizer;
  std::size_t data_samples = 16384;
  std::size_t eval_samples = 10000;
  std::size_t eval_every = 500;
  double grid_lo = -3.0, grid_hi = 3.0;
  std::size_t grid_points = 601;
  FlowConfig flow;
  CurriculumConfig curriculum;
  NllConfig nll;
  ElboConfig elbo;
};

// Strict parsing: any unrecognized key anywhere in the tree raises
// ConfigError naming the key.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config_file(const std::filesystem::path& path);

DistributionSpec parse_distribution(const nlohmann::json& j, const std::string& where);
nlohmann::json distribution_to_json(const DistributionSpec& spec);

// Minimal JSON-Schema validator covering the subset used by
// schemas/report.schema.json: type, required, properties, items,
// additionalProperties, minimum. Returns an empty string when valid, else
// the first violation.
std::string validate_against_schema(const nlohmann::json& instance,
                                    const nlohmann::json& schema,
                                    const std::string& where = "$");

}  // namespace pf
