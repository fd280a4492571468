#include "pushforward/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>

#include "pushforward/errors.hpp"
#include "pushforward/flows.hpp"

namespace pf {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);  // LF endings everywhere
  if (!out) throw NumericError("cannot open output file " + path.string());
  return out;
}

void check_finite(double v, const char* what) {
  if (!std::isfinite(v))
    throw NumericError(std::string("report: non-finite value for ") + what);
}

json history_to_json(const std::vector<EpochRecord>& history) {
  json epochs = json::array();
  for (const auto& rec : history) {
    check_finite(rec.loss, "loss");
    json row = {{"epoch", rec.epoch}, {"loss", rec.loss}};
    if (std::isfinite(rec.metric)) row["metric"] = rec.metric;
    epochs.push_back(row);
  }
  return epochs;
}

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<EpochRecord>& history) {
  auto out = open_out(path);
  out << "epoch,loss,metric\n";
  for (const auto& rec : history) {
    out << rec.epoch << "," << format_g17(rec.loss) << ",";
    if (std::isfinite(rec.metric)) out << format_g17(rec.metric);
    out << "\n";
  }
}

void write_samples_csv(const std::filesystem::path& path, const Tensor& samples) {
  auto out = open_out(path);
  for (std::size_t c = 0; c < samples.cols(); ++c) out << (c ? ",x" : "x") << c;
  out << "\n";
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    for (std::size_t c = 0; c < samples.cols(); ++c) {
      if (c) out << ",";
      out << format_g17(samples(i, c));
    }
    out << "\n";
  }
}

json model_to_json(const MlpParams& model) {
  json layers = json::array();
  for (const auto& l : model.layers) {
    layers.push_back({{"in", l.weight.rows()},
                      {"out", l.weight.cols()},
                      {"weight", l.weight.data},
                      {"bias", l.bias.data}});
  }
  return {{"layers", layers},
          {"hidden", model.hidden == Activation::Tanh ? "tanh" : "relu"},
          {"output", model.output == OutputActivation::Identity
                         ? "identity"
                         : (model.output == OutputActivation::Sigmoid ? "sigmoid" : "tanh")}};
}

void write_report(const std::filesystem::path& dir, const std::string& kind,
                  std::uint64_t seed, const std::vector<EpochRecord>& history, json final,
                  json extra = json::object()) {
  json report = {{"kind", kind},
                 {"seed", seed},
                 {"epochs", history_to_json(history)},
                 {"final", std::move(final)}};
  for (auto it = extra.begin(); it != extra.end(); ++it) report[it.key()] = it.value();
  auto out = open_out(dir / "report.json");
  out << report.dump(2) << "\n";
}

// model pushforward on a fixed evaluation grid
void write_map_grid(const std::filesystem::path& path, const ExperimentConfig& cfg,
                    const std::function<double(double)>& map,
                    const std::function<double(double)>* oracle) {
  auto out = open_out(path);
  out << (oracle ? "z,phi,target_cdf\n" : "z,phi\n");
  for (std::size_t i = 0; i < cfg.grid_points; ++i) {
    double z = cfg.grid_lo + (cfg.grid_hi - cfg.grid_lo) * i / (cfg.grid_points - 1.0);
    out << format_g17(z) << "," << format_g17(map(z));
    if (oracle) out << "," << format_g17((*oracle)(z));
    out << "\n";
  }
}

double scalar_map(const MlpParams& model, double z) {
  Tensor in({1, 1}, {z});
  return mlp_forward(model, in)[0];
}

// ---- kind runners ----

void run_train_statmatch(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                         std::ostream& log) {
  Rng rng(cfg.seed);
  Rng data_rng = rng.fork(1);
  Rng init_rng = rng.fork(2);
  Rng train_rng = rng.fork(3);
  Rng eval_rng = rng.fork(4);

  Tensor data = sample(cfg.target, cfg.data_samples, data_rng);
  MlpParams model = MlpParams::init(cfg.model.layers, cfg.model.hidden, cfg.model.output,
                                    init_rng);
  SampleObjective objective{cfg.objective};

  TrainConfig tc;
  tc.epochs = cfg.optimizer.epochs;
  tc.batch = cfg.optimizer.batch;
  tc.adam = cfg.optimizer.adam;
  tc.eval_every = cfg.eval_every;
  tc.metric = [&](const MlpParams& m, std::size_t) {
    Rng r = eval_rng;  // fixed eval stream per call keeps runs deterministic
    Tensor z = sample(cfg.base, cfg.eval_samples, r);
    return wasserstein1(mlp_forward(m, z), data);
  };

  auto provider = [&data](std::size_t, Rng&) { return data; };
  TrainResult tr = train_pushforward(model, cfg.base, provider, objective, tc, train_rng);

  Rng final_rng = eval_rng;
  Tensor z = sample(cfg.base, cfg.eval_samples, final_rng);
  Tensor pushed = mlp_forward(model, z);
  double final_w1 = wasserstein1(pushed, data);
  log << "final W1(pushforward, data) = " << final_w1 << "\n";

  write_metrics_csv(dir / "metrics.csv", tr.history);
  write_samples_csv(dir / "samples.csv", pushed);
  if (cfg.model.layers.front() == 1 && cfg.model.layers.back() == 1)
    write_map_grid(dir / "map_grid.csv", cfg,
                   [&](double zz) { return scalar_map(model, zz); }, nullptr);
  check_finite(final_w1, "w1");
  write_report(dir, cfg.kind, cfg.seed, tr.history,
               {{"w1", final_w1}, {"loss", tr.final_loss}},
               {{"model", model_to_json(model)}});
}

void run_train_nll(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                   std::ostream& log) {
  Rng rng(cfg.seed);
  Rng data_rng = rng.fork(1);
  Rng eval_rng = rng.fork(4);
  Tensor data = sample(cfg.target, cfg.data_samples, data_rng);

  MonotoneFitConfig fc;
  fc.hidden = cfg.nll.hidden;
  fc.max_epochs = cfg.nll.max_epochs;
  MonotoneFitResult fit = fit_mle(cfg.base, data, fc);
  log << "NLL " << fit.nll_history.front() << " -> " << fit.nll_history.back() << " in "
      << fit.epochs << " accepted steps\n";

  std::vector<EpochRecord> history;
  for (std::size_t i = 0; i < fit.nll_history.size(); ++i)
    history.push_back({i, fit.nll_history[i]});

  Tensor z = sample(cfg.base, cfg.eval_samples, eval_rng);
  Tensor pushed({z.rows(), 1});
  for (std::size_t i = 0; i < z.rows(); ++i) pushed[i] = fit.map.forward(z[i]);

  write_metrics_csv(dir / "metrics.csv", history);
  write_samples_csv(dir / "samples.csv", pushed);
  write_map_grid(dir / "map_grid.csv", cfg,
                 [&](double zz) { return fit.map.forward(zz); }, nullptr);
  double w1 = wasserstein1(pushed, data);
  check_finite(w1, "w1");
  write_report(dir, cfg.kind, cfg.seed, history,
               {{"nll", fit.nll_history.back()}, {"w1", w1}});
}

void run_train_elbo(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                    std::ostream& log) {
  LinearGaussianModel model{cfg.elbo.loading};
  std::vector<ElboIterate> trace;
  ElboFitResult fit = fit_elbo(model, cfg.elbo.x, cfg.elbo.init_mean, cfg.elbo.init_var, 0.1,
                               200000, 1e-13, &trace);
  auto [pm, pv] = posterior(model, cfg.elbo.x);
  log << "ELBO converged to q = N(" << fit.q_mean << ", " << fit.q_var << "), posterior N("
      << pm << ", " << pv << ")\n";

  std::vector<EpochRecord> history;
  for (const auto& it : trace)
    history.push_back({static_cast<std::size_t>(it.iteration), -it.elbo});

  write_metrics_csv(dir / "metrics.csv", history);
  write_report(dir, cfg.kind, cfg.seed, history,
               {{"elbo", fit.final_elbo},
                {"log_marginal", log_marginal(model, cfg.elbo.x)},
                {"q_mean", fit.q_mean},
                {"q_var", fit.q_var},
                {"posterior_mean", pm},
                {"posterior_var", pv}});
}

void run_simulate_flow(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                       std::ostream& log) {
  Rng rng(cfg.seed);
  Rng data_rng = rng.fork(1);
  Rng sde_rng = rng.fork(2);
  Rng eval_rng = rng.fork(4);

  // forward noising of the target
  Tensor x0 = sample(cfg.target, cfg.flow.particles, data_rng);
  ParticleEnsemble start{x0, 0.0};
  ParticleEnsemble noised =
      simulate_sde(QuadraticPotential{}, start, cfg.flow.t_end, cfg.flow.dt, sde_rng);
  double mean = 0.0, var = 0.0;
  for (double v : noised.positions.data) mean += v;
  mean /= static_cast<double>(noised.positions.size());
  for (double v : noised.positions.data) var += (v - mean) * (v - mean);
  var /= static_cast<double>(noised.positions.size());
  log << "noised ensemble at t=" << cfg.flow.t_end << ": mean " << mean << " var " << var
      << "\n";

  // reverse probability-flow transport from the horizon back toward 0
  bool gaussian_family = std::holds_alternative<StdGaussian>(cfg.target) ||
                         std::holds_alternative<GaussianMixture>(cfg.target);
  double t_stop = gaussian_family ? 0.0 : cfg.flow.t_floor;
  VelocityFn velocity = [&](double t, double x) {
    GaussianFlowState state = gaussian_family
                                  ? ou_flow_state(cfg.target, t)
                                  : ou_flow_state_empirical(x0, std::max(t, cfg.flow.t_floor));
    return velocity_field(state, x);
  };
  Tensor z = sample(StdGaussian{1}, cfg.eval_samples, eval_rng);
  Tensor transported = integrate_ode(velocity, z, cfg.flow.horizon, t_stop, cfg.flow.steps);
  Tensor target_eval = sample(cfg.target, cfg.eval_samples, eval_rng);
  double w1 = wasserstein1(transported, target_eval);
  log << "W1(reverse transport, target samples) = " << w1 << "\n";

  std::vector<EpochRecord> history;
  write_metrics_csv(dir / "metrics.csv", history);
  write_samples_csv(dir / "samples.csv", transported);
  check_finite(w1, "w1");
  write_report(dir, cfg.kind, cfg.seed, history,
               {{"noised_mean", mean},
                {"noised_var", var},
                {"t_end", cfg.flow.t_end},
                {"transport_w1", w1}});
}

CurriculumSchedule schedule_from_config(const ExperimentConfig& cfg) {
  CurriculumSchedule s;
  s.times = cfg.curriculum.times.empty()
                ? geometric_schedule(cfg.curriculum.t0, cfg.curriculum.ratio,
                                     cfg.curriculum.stages)
                : cfg.curriculum.times;
  s.epochs_per_stage = cfg.curriculum.epochs_per_stage;
  s.objective = cfg.objective;
  s.adam = cfg.optimizer.adam;
  s.batch = cfg.optimizer.batch;
  s.stage_threshold = cfg.curriculum.threshold;
  s.retry_cap = cfg.curriculum.retry_cap;
  s.eval_samples = cfg.eval_samples;
  return s;
}

void write_stages_csv(const std::filesystem::path& path,
                      const std::vector<StageReport>& stages) {
  auto out = open_out(path);
  out << "stage,t,final_loss,w1_to_stage_target,epochs_run,gate_passed\n";
  for (const auto& s : stages)
    out << s.stage << "," << format_g17(s.t) << "," << format_g17(s.final_loss) << ","
        << format_g17(s.w1_to_stage_target) << "," << s.epochs_run << ","
        << (s.gate_passed ? 1 : 0) << "\n";
}

json stages_to_json(const std::vector<StageReport>& stages) {
  json rows = json::array();
  for (const auto& s : stages) {
    check_finite(s.final_loss, "stage loss");
    check_finite(s.w1_to_stage_target, "stage w1");
    rows.push_back({{"stage", s.stage},
                    {"t", s.t},
                    {"final_loss", s.final_loss},
                    {"w1_to_stage_target", s.w1_to_stage_target},
                    {"epochs_run", s.epochs_run},
                    {"gate_passed", s.gate_passed}});
  }
  return rows;
}

void run_curriculum_kind(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                         std::ostream& log) {
  Rng rng(cfg.seed);
  Rng data_rng = rng.fork(1);
  Rng init_rng = rng.fork(2);
  Rng train_rng = rng.fork(3);
  Rng eval_rng = rng.fork(4);

  Tensor data = sample(cfg.target, cfg.data_samples, data_rng);
  MlpParams model = MlpParams::init(cfg.model.layers, cfg.model.hidden, cfg.model.output,
                                    init_rng);
  CurriculumSchedule schedule = schedule_from_config(cfg);
  CurriculumResult cr = run_curriculum(schedule, cfg.base, data, model, train_rng);
  for (const auto& s : cr.stages)
    log << "stage " << s.stage << " t=" << s.t << " W1=" << s.w1_to_stage_target
        << (s.gate_passed ? "" : " (gate failed)") << " [" << s.wall_seconds << "s]\n";

  Tensor z = sample(cfg.base, cfg.eval_samples, eval_rng);
  Tensor pushed = mlp_forward(model, z);
  double final_w1 = wasserstein1(pushed, data);
  log << "final W1(pushforward, data) = " << final_w1 << "\n";

  write_metrics_csv(dir / "metrics.csv", cr.history);
  write_stages_csv(dir / "stages.csv", cr.stages);
  write_samples_csv(dir / "samples.csv", pushed);
  if (cfg.model.layers.front() == 1 && cfg.model.layers.back() == 1)
    write_map_grid(dir / "map_grid.csv", cfg,
                   [&](double zz) { return scalar_map(model, zz); }, nullptr);
  check_finite(final_w1, "w1");
  write_report(dir, cfg.kind, cfg.seed, cr.history,
               {{"w1", final_w1}},
               {{"stages", stages_to_json(cr.stages)}, {"model", model_to_json(model)}});
}

void run_compare(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                 std::ostream& log) {
  Rng rng(cfg.seed);
  Rng data_rng = rng.fork(1);
  Rng init_rng = rng.fork(2);

  Tensor data = sample(cfg.target, cfg.data_samples, data_rng);
  MlpParams model_template = MlpParams::init(cfg.model.layers, cfg.model.hidden,
                                             cfg.model.output, init_rng);
  CurriculumSchedule schedule = schedule_from_config(cfg);
  ComparisonReport report = compare_direct_vs_curriculum(schedule, cfg.base, data, cfg.target,
                                                         model_template, cfg.seed);
  log << "direct W1 = " << report.direct.final_w1
      << ", curriculum W1 = " << report.curriculum.final_w1 << "\n";

  // one combined metrics file: arm column, epochs monotone within each arm
  auto out = open_out(dir / "metrics.csv");
  out << "arm,epoch,loss\n";
  for (const auto& rec : report.direct.history)
    out << "direct," << rec.epoch << "," << format_g17(rec.loss) << "\n";
  for (const auto& rec : report.curriculum.history)
    out << "curriculum," << rec.epoch << "," << format_g17(rec.loss) << "\n";

  auto arm_json = [&](const ArmResult& arm) {
    check_finite(arm.final_w1, "arm w1");
    return json{{"final_w1", arm.final_w1},
                {"interval_masses", arm.interval_masses},
                {"stages", stages_to_json(arm.stages)}};
  };
  write_report(dir, cfg.kind, cfg.seed, report.curriculum.history,
               {{"direct", arm_json(report.direct)},
                {"curriculum", arm_json(report.curriculum)}});
}

}  // namespace

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                    std::ostream& log) {
  std::filesystem::create_directories(out_dir);
  if (cfg.kind == "train-statmatch")
    run_train_statmatch(cfg, out_dir, log);
  else if (cfg.kind == "train-nll")
    run_train_nll(cfg, out_dir, log);
  else if (cfg.kind == "train-elbo")
    run_train_elbo(cfg, out_dir, log);
  else if (cfg.kind == "simulate-flow")
    run_simulate_flow(cfg, out_dir, log);
  else if (cfg.kind == "curriculum")
    run_curriculum_kind(cfg, out_dir, log);
  else if (cfg.kind == "compare")
    run_compare(cfg, out_dir, log);
  else if (cfg.kind == "reproduce-fig1")
    reproduce_fig1(cfg.seed, out_dir, log);
  else
    throw ConfigError("run_experiment: unknown kind \"" + cfg.kind + "\"");
}

Fig1Result reproduce_fig1(std::uint64_t seed, const std::filesystem::path& out_dir,
                          std::ostream& log) {
  std::filesystem::create_directories(out_dir);
  ExperimentConfig cfg;
  cfg.kind = "reproduce-fig1";
  cfg.seed = seed;
  cfg.base = StdGaussian{1};
  cfg.target = Uniform{0.0, 1.0};
  cfg.model.layers = {1, 32, 32, 1};
  cfg.model.hidden = Activation::Tanh;
  cfg.model.output = OutputActivation::Sigmoid;
  cfg.objective = ObjectiveConfig{};  // fourier, k = 1..10, [0,1], uniform weights

  Rng rng(seed);
  Rng data_rng = rng.fork(1);
  Rng init_rng = rng.fork(2);
  Rng train_rng = rng.fork(3);
  Rng eval_rng = rng.fork(4);

  Tensor data = sample(cfg.target, cfg.data_samples, data_rng);
  MlpParams model = MlpParams::init(cfg.model.layers, cfg.model.hidden, cfg.model.output,
                                    init_rng);
  SampleObjective objective{cfg.objective};

  TrainConfig tc;
  tc.epochs = 5000;
  tc.batch = 512;
  tc.adam.step = 1e-3;
  tc.eval_every = 500;
  tc.metric = [&](const MlpParams& m, std::size_t) {
    Rng r = eval_rng;
    Tensor z = sample(cfg.base, cfg.eval_samples, r);
    return wasserstein1(mlp_forward(m, z), data);
  };
  auto provider = [&data](std::size_t, Rng&) { return data; };
  TrainResult tr = train_pushforward(model, cfg.base, provider, objective, tc, train_rng);

  // evaluation: distribution-level gap and the sup gap to the CDF branches
  Rng final_rng = eval_rng;
  Tensor z = sample(cfg.base, cfg.eval_samples, final_rng);
  Tensor pushed = mlp_forward(model, z);
  Tensor target_eval = sample(cfg.target, cfg.eval_samples, final_rng);
  double w1 = wasserstein1(pushed, target_eval);

  double sup_phi = 0.0, sup_mirror = 0.0;
  for (std::size_t i = 0; i < cfg.grid_points; ++i) {
    double zz = cfg.grid_lo + (cfg.grid_hi - cfg.grid_lo) * i / (cfg.grid_points - 1.0);
    double phi = scalar_map(model, zz);
    double oracle = normal_cdf(zz);
    sup_phi = std::max(sup_phi, std::abs(phi - oracle));
    sup_mirror = std::max(sup_mirror, std::abs(phi - (1.0 - oracle)));
  }
  Fig1Result result;
  result.w1 = w1;
  result.sup_distance = std::min(sup_phi, sup_mirror);
  result.passed = w1 <= result.threshold;
  log << "fig1: W1 = " << w1 << " (threshold " << result.threshold
      << "), sup|phi - CDF| = " << result.sup_distance << "\n";

  write_metrics_csv(out_dir / "metrics.csv", tr.history);
  write_samples_csv(out_dir / "samples.csv", pushed);
  std::function<double(double)> oracle = [](double zz) { return normal_cdf(zz); };
  write_map_grid(out_dir / "map_grid.csv", cfg,
                 [&](double zz) { return scalar_map(model, zz); }, &oracle);
  check_finite(w1, "w1");
  check_finite(result.sup_distance, "sup_distance");
  write_report(out_dir, cfg.kind, seed, tr.history,
               {{"w1", w1},
                {"w1_threshold", result.threshold},
                {"passed", result.passed},
                {"sup_distance_to_cdf", result.sup_distance}},
               {{"model", model_to_json(model)}});
  return result;
}

}  // namespace pf
