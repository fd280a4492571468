#include "pushforward/config.hpp"

#include <fstream>
#include <set>

#include "pushforward/errors.hpp"

namespace pf {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError(where + ": unknown key \"" + it.key() + "\"");
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("key \"") + key + "\": " + e.what());
  }
}

}  // namespace

DistributionSpec parse_distribution(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("type"))
    throw ConfigError(where + ": distribution needs a \"type\"");
  const std::string type = j.at("type").get<std::string>();
  if (type == "std-gaussian") {
    check_keys(j, {"type", "dim"}, where);
    return StdGaussian{get_or<std::size_t>(j, "dim", 1)};
  }
  if (type == "uniform") {
    check_keys(j, {"type", "lo", "hi"}, where);
    double lo = get_or<double>(j, "lo", 0.0), hi = get_or<double>(j, "hi", 1.0);
    if (!(hi > lo)) throw ConfigError(where + ": uniform needs hi > lo");
    return Uniform{lo, hi};
  }
  if (type == "intervals") {
    check_keys(j, {"type", "parts"}, where);
    if (!j.contains("parts")) throw ConfigError(where + ": intervals need \"parts\"");
    std::vector<std::pair<double, double>> intervals;
    std::vector<double> weights;
    bool any_weight = false;
    for (const auto& part : j.at("parts")) {
      check_keys(part, {"lo", "hi", "weight"}, where + ".parts");
      intervals.emplace_back(part.at("lo").get<double>(), part.at("hi").get<double>());
      if (part.contains("weight")) {
        any_weight = true;
        weights.push_back(part.at("weight").get<double>());
      } else {
        weights.push_back(-1.0);
      }
    }
    if (any_weight)
      for (double w : weights)
        if (w < 0.0) throw ConfigError(where + ": either all parts carry weights or none");
    return make_union_of_intervals(std::move(intervals), any_weight ? weights : std::vector<double>{});
  }
  if (type == "gaussian-mixture") {
    check_keys(j, {"type", "components"}, where);
    std::vector<GaussianMixture::Component> comps;
    for (const auto& c : j.at("components")) {
      check_keys(c, {"mean", "var", "weight"}, where + ".components");
      comps.push_back({c.at("mean").get<double>(), c.at("var").get<double>(),
                       get_or<double>(c, "weight", 1.0)});
    }
    return make_gaussian_mixture(std::move(comps));
  }
  if (type == "empirical") {
    check_keys(j, {"type", "samples"}, where);
    std::vector<double> samples = j.at("samples").get<std::vector<double>>();
    return make_empirical(std::move(samples));
  }
  throw ConfigError(where + ": unknown distribution type \"" + type + "\"");
}

json distribution_to_json(const DistributionSpec& spec) {
  return std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, StdGaussian>) {
          return {{"type", "std-gaussian"}, {"dim", s.dim}};
        } else if constexpr (std::is_same_v<T, Uniform>) {
          return {{"type", "uniform"}, {"lo", s.lo}, {"hi", s.hi}};
        } else if constexpr (std::is_same_v<T, UnionOfIntervals>) {
          json parts = json::array();
          for (const auto& p : s.parts)
            parts.push_back({{"lo", p.lo}, {"hi", p.hi}, {"weight", p.weight}});
          return {{"type", "intervals"}, {"parts", parts}};
        } else if constexpr (std::is_same_v<T, GaussianMixture>) {
          json comps = json::array();
          for (const auto& c : s.components)
            comps.push_back({{"mean", c.mean}, {"var", c.var}, {"weight", c.weight}});
          return {{"type", "gaussian-mixture"}, {"components", comps}};
        } else {
          return {{"type", "empirical"}, {"samples", s.samples.data}};
        }
      },
      spec);
}

namespace {

ObjectiveConfig parse_objective(const json& j) {
  check_keys(j, {"key", "frequencies", "interval", "ts", "bandwidth", "estimator"}, "objective");
  ObjectiveConfig cfg;
  cfg.key = get_or<std::string>(j, "key", cfg.key);
  cfg.frequencies = get_or<std::vector<int>>(j, "frequencies", cfg.frequencies);
  if (j.contains("interval")) {
    auto iv = j.at("interval").get<std::vector<double>>();
    if (iv.size() != 2 || !(iv[1] > iv[0]))
      throw ConfigError("objective.interval: expected [lo, hi] with hi > lo");
    cfg.interval_lo = iv[0];
    cfg.interval_hi = iv[1];
  }
  cfg.ts = get_or<std::vector<double>>(j, "ts", cfg.ts);
  cfg.bandwidth = get_or<double>(j, "bandwidth", cfg.bandwidth);
  std::string est = get_or<std::string>(j, "estimator", "biased");
  if (est == "biased")
    cfg.estimator = Estimator::Biased;
  else if (est == "unbiased")
    cfg.estimator = Estimator::Unbiased;
  else
    throw ConfigError("objective.estimator: \"" + est + "\" is not biased|unbiased");
  if (!is_sample_objective_key(cfg.key) && cfg.key != "nll-flow" && cfg.key != "elbo-lg")
    throw ConfigError("objective: unknown key \"" + cfg.key + "\"");
  return cfg;
}

ModelConfig parse_model(const json& j) {
  check_keys(j, {"layers", "hidden", "output"}, "model");
  ModelConfig cfg;
  cfg.layers = get_or<std::vector<std::size_t>>(j, "layers", cfg.layers);
  if (cfg.layers.size() < 2) throw ConfigError("model.layers: need at least [in, out]");
  std::string hidden = get_or<std::string>(j, "hidden", "tanh");
  if (hidden == "tanh")
    cfg.hidden = Activation::Tanh;
  else if (hidden == "relu")
    cfg.hidden = Activation::Relu;
  else
    throw ConfigError("model.hidden: \"" + hidden + "\" is not tanh|relu");
  std::string output = get_or<std::string>(j, "output", "identity");
  if (output == "identity")
    cfg.output = OutputActivation::Identity;
  else if (output == "sigmoid")
    cfg.output = OutputActivation::Sigmoid;
  else if (output == "tanh")
    cfg.output = OutputActivation::Tanh;
  else
    throw ConfigError("model.output: \"" + output + "\" is not identity|sigmoid|tanh");
  return cfg;
}

OptimizerConfig parse_optimizer(const json& j) {
  check_keys(j, {"algorithm", "step", "beta1", "beta2", "eps", "momentum", "epochs", "batch"},
             "optimizer");
  OptimizerConfig cfg;
  cfg.algorithm = get_or<std::string>(j, "algorithm", cfg.algorithm);
  if (cfg.algorithm != "adam" && cfg.algorithm != "sgd")
    throw ConfigError("optimizer.algorithm: \"" + cfg.algorithm + "\" is not adam|sgd");
  cfg.adam.step = get_or<double>(j, "step", cfg.adam.step);
  cfg.adam.beta1 = get_or<double>(j, "beta1", cfg.adam.beta1);
  cfg.adam.beta2 = get_or<double>(j, "beta2", cfg.adam.beta2);
  cfg.adam.eps = get_or<double>(j, "eps", cfg.adam.eps);
  cfg.momentum = get_or<double>(j, "momentum", cfg.momentum);
  cfg.epochs = get_or<std::size_t>(j, "epochs", cfg.epochs);
  cfg.batch = get_or<std::size_t>(j, "batch", cfg.batch);
  if (cfg.epochs < 1) throw ConfigError("optimizer.epochs: must be >= 1");
  if (cfg.batch < 1) throw ConfigError("optimizer.batch: must be >= 1");
  return cfg;
}

FlowConfig parse_flow(const json& j) {
  check_keys(j, {"potential", "t_end", "dt", "steps", "horizon", "particles", "t_floor"},
             "flow");
  FlowConfig cfg;
  cfg.potential = get_or<std::string>(j, "potential", cfg.potential);
  if (cfg.potential != "quadratic")
    throw ConfigError("flow.potential: only \"quadratic\" is configurable");
  cfg.t_end = get_or<double>(j, "t_end", cfg.t_end);
  cfg.dt = get_or<double>(j, "dt", cfg.dt);
  cfg.steps = get_or<int>(j, "steps", cfg.steps);
  cfg.horizon = get_or<double>(j, "horizon", cfg.horizon);
  cfg.particles = get_or<std::size_t>(j, "particles", cfg.particles);
  cfg.t_floor = get_or<double>(j, "t_floor", cfg.t_floor);
  return cfg;
}

CurriculumConfig parse_curriculum(const json& j) {
  check_keys(j, {"times", "t0", "ratio", "stages", "epochs_per_stage", "retry_cap", "threshold"},
             "curriculum");
  CurriculumConfig cfg;
  cfg.times = get_or<std::vector<double>>(j, "times", cfg.times);
  cfg.t0 = get_or<double>(j, "t0", cfg.t0);
  cfg.ratio = get_or<double>(j, "ratio", cfg.ratio);
  cfg.stages = get_or<std::size_t>(j, "stages", cfg.stages);
  cfg.epochs_per_stage = get_or<std::size_t>(j, "epochs_per_stage", cfg.epochs_per_stage);
  cfg.retry_cap = get_or<int>(j, "retry_cap", cfg.retry_cap);
  cfg.threshold = get_or<double>(j, "threshold", cfg.threshold);
  return cfg;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  check_keys(j,
             {"kind", "seed", "output_dir", "base", "target", "objective", "model", "optimizer",
              "data_samples", "eval_samples", "eval_every", "map_grid", "flow", "curriculum",
              "nll", "elbo"},
             "config");
  ExperimentConfig cfg;
  if (!j.contains("kind")) throw ConfigError("config: missing \"kind\"");
  cfg.kind = j.at("kind").get<std::string>();
  static const std::set<std::string> kinds = {"train-statmatch", "train-nll", "train-elbo",
                                              "simulate-flow",   "curriculum", "compare",
                                              "reproduce-fig1"};
  if (!kinds.count(cfg.kind)) throw ConfigError("config: unknown kind \"" + cfg.kind + "\"");
  if (!j.contains("seed")) throw ConfigError("config: missing \"seed\" (runs take no implicit entropy)");
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.output_dir = get_or<std::string>(j, "output_dir", cfg.output_dir);
  if (j.contains("base")) cfg.base = parse_distribution(j.at("base"), "base");
  if (j.contains("target")) cfg.target = parse_distribution(j.at("target"), "target");
  if (j.contains("objective")) cfg.objective = parse_objective(j.at("objective"));
  if (j.contains("model")) cfg.model = parse_model(j.at("model"));
  if (j.contains("optimizer")) cfg.optimizer = parse_optimizer(j.at("optimizer"));
  cfg.data_samples = get_or<std::size_t>(j, "data_samples", cfg.data_samples);
  cfg.eval_samples = get_or<std::size_t>(j, "eval_samples", cfg.eval_samples);
  cfg.eval_every = get_or<std::size_t>(j, "eval_every", cfg.eval_every);
  if (j.contains("map_grid")) {
    const json& g = j.at("map_grid");
    check_keys(g, {"lo", "hi", "points"}, "map_grid");
    cfg.grid_lo = get_or<double>(g, "lo", cfg.grid_lo);
    cfg.grid_hi = get_or<double>(g, "hi", cfg.grid_hi);
    cfg.grid_points = get_or<std::size_t>(g, "points", cfg.grid_points);
    if (cfg.grid_points < 2 || !(cfg.grid_hi > cfg.grid_lo))
      throw ConfigError("map_grid: need hi > lo and points >= 2");
  }
  if (j.contains("flow")) cfg.flow = parse_flow(j.at("flow"));
  if (j.contains("curriculum")) cfg.curriculum = parse_curriculum(j.at("curriculum"));
  if (j.contains("nll")) {
    const json& n = j.at("nll");
    check_keys(n, {"hidden", "max_epochs"}, "nll");
    cfg.nll.hidden = get_or<std::size_t>(n, "hidden", cfg.nll.hidden);
    cfg.nll.max_epochs = get_or<int>(n, "max_epochs", cfg.nll.max_epochs);
  }
  if (j.contains("elbo")) {
    const json& e = j.at("elbo");
    check_keys(e, {"loading", "x", "init_mean", "init_var"}, "elbo");
    cfg.elbo.loading = get_or<double>(e, "loading", cfg.elbo.loading);
    cfg.elbo.x = get_or<double>(e, "x", cfg.elbo.x);
    cfg.elbo.init_mean = get_or<double>(e, "init_mean", cfg.elbo.init_mean);
    cfg.elbo.init_var = get_or<double>(e, "init_var", cfg.elbo.init_var);
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

std::string validate_against_schema(const nlohmann::json& instance,
                                    const nlohmann::json& schema, const std::string& where) {
  using nlohmann::json;
  if (schema.contains("type")) {
    const std::string type = schema.at("type").get<std::string>();
    bool ok = (type == "object" && instance.is_object()) ||
              (type == "array" && instance.is_array()) ||
              (type == "string" && instance.is_string()) ||
              (type == "integer" && instance.is_number_integer()) ||
              (type == "number" && instance.is_number()) ||
              (type == "boolean" && instance.is_boolean());
    if (!ok) return where + ": expected type " + type;
  }
  if (schema.contains("minimum") && instance.is_number()) {
    if (instance.get<double>() < schema.at("minimum").get<double>())
      return where + ": below minimum";
  }
  if (instance.is_object()) {
    if (schema.contains("required"))
      for (const auto& req : schema.at("required"))
        if (!instance.contains(req.get<std::string>()))
          return where + ": missing required key \"" + req.get<std::string>() + "\"";
    const json props = schema.value("properties", json::object());
    for (auto it = instance.begin(); it != instance.end(); ++it) {
      if (props.contains(it.key())) {
        std::string err = validate_against_schema(it.value(), props.at(it.key()),
                                                  where + "." + it.key());
        if (!err.empty()) return err;
      } else if (schema.contains("additionalProperties") &&
                 schema.at("additionalProperties").is_boolean() &&
                 !schema.at("additionalProperties").get<bool>()) {
        return where + ": additional property \"" + it.key() + "\" not allowed";
      }
    }
  }
  if (instance.is_array() && schema.contains("items")) {
    for (std::size_t i = 0; i < instance.size(); ++i) {
      std::string err = validate_against_schema(instance.at(i), schema.at("items"),
                                                where + "[" + std::to_string(i) + "]");
      if (!err.empty()) return err;
    }
  }
  return {};
}

}  // namespace pf
