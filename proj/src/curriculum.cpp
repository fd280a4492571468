#include "pushforward/curriculum.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "pushforward/errors.hpp"

namespace pf {

void CurriculumSchedule::validate() const {
  if (times.empty()) throw ContractError("curriculum: empty schedule");
  for (std::size_t k = 1; k < times.size(); ++k)
    if (!(times[k] < times[k - 1]))
      throw ContractError("curriculum: times must be strictly decreasing");
  if (times.back() != 0.0) throw ContractError("curriculum: last stage time must be 0");
  if (epochs_per_stage < 1) throw ContractError("curriculum: epochs_per_stage must be >= 1");
  if (retry_cap < 0) throw ContractError("curriculum: retry_cap must be >= 0");
}

std::vector<double> geometric_schedule(double t0, double ratio, std::size_t stages) {
  if (!(t0 > 0.0) || !(ratio > 0.0 && ratio < 1.0) || stages < 1)
    throw ContractError("geometric_schedule: need t0 > 0, ratio in (0,1), stages >= 1");
  std::vector<double> times;
  double t = t0;
  for (std::size_t k = 0; k + 1 < stages; ++k) {
    times.push_back(t);
    t *= ratio;
  }
  times.push_back(0.0);
  return times;
}

namespace {

// analytic envelope of the noised data range: e^-t [lo,hi] +- 4 sigma_t
std::pair<double, double> noising_envelope(double lo, double hi, double t) {
  double decay = std::exp(-t);
  double sigma = std::sqrt(1.0 - std::exp(-2.0 * t));
  return {decay * lo - 4.0 * sigma, decay * hi + 4.0 * sigma};
}

ObjectiveConfig stage_objective_config(const CurriculumSchedule& schedule, double data_lo,
                                       double data_hi, double t) {
  ObjectiveConfig cfg = schedule.objective;
  if (schedule.adapt_interval && cfg.key == "fourier" && t > 0.0) {
    auto [lo, hi] = noising_envelope(data_lo, data_hi, t);
    cfg.interval_lo = std::min(cfg.interval_lo, lo);
    cfg.interval_hi = std::max(cfg.interval_hi, hi);
  }
  return cfg;
}

}  // namespace

CurriculumResult run_curriculum(const CurriculumSchedule& schedule, const DistributionSpec& mu0,
                                const Tensor& data, MlpParams& model, Rng& rng) {
  schedule.validate();
  if (data.rows() == 0) throw ContractError("run_curriculum: empty data");
  if (data.cols() != 1) throw UnsupportedError("run_curriculum: 1-D targets only");

  double data_lo = data[0], data_hi = data[0];
  for (double v : data.data) {
    data_lo = std::min(data_lo, v);
    data_hi = std::max(data_hi, v);
  }

  CurriculumResult result;
  std::size_t epoch_offset = 0;

  for (std::size_t k = 0; k < schedule.times.size(); ++k) {
    const double t = schedule.times[k];
    Rng stage_rng = rng.fork(0xC0FFEE00ULL + k);
    Rng gate_rng = stage_rng.fork(0x47415445ULL);

    SampleObjective objective(stage_objective_config(schedule, data_lo, data_hi, t));
    // fresh noise every epoch on a data subsample; the statistics stay
    // unbiased across epochs without paying a full-dataset pass each step
    const std::size_t stat_batch = std::min<std::size_t>(data.rows(), 4096);
    auto provider = [&data, t, stat_batch](std::size_t, Rng& r) {
      Tensor subset({stat_batch, data.cols()});
      for (std::size_t i = 0; i < stat_batch; ++i) {
        std::size_t j = static_cast<std::size_t>(r.below(data.rows()));
        for (std::size_t c = 0; c < data.cols(); ++c) subset(i, c) = data(j, c);
      }
      return ou_noise(subset, t, r);
    };

    TrainConfig tc;
    tc.epochs = schedule.epochs_per_stage;
    tc.batch = schedule.batch;
    tc.adam = schedule.adam;

    auto started = std::chrono::steady_clock::now();
    double final_loss = 0.0;
    double w1 = 0.0;
    std::size_t epochs_run = 0;
    bool gate_passed = false;

    for (int attempt = 0; attempt <= schedule.retry_cap; ++attempt) {
      Rng attempt_rng = stage_rng.fork(attempt);
      TrainResult tr = train_pushforward(model, mu0, provider, objective, tc, attempt_rng);
      final_loss = tr.final_loss;
      for (EpochRecord rec : tr.history) {
        rec.epoch += epoch_offset + epochs_run;
        result.history.push_back(rec);
      }
      epochs_run += tr.history.size();

      Tensor z = sample(mu0, schedule.eval_samples, gate_rng);
      Tensor pushed = mlp_forward(model, z);
      Tensor stage_targets = ou_noise(data, t, gate_rng);
      w1 = wasserstein1(pushed, stage_targets);
      if (w1 <= schedule.stage_threshold) {
        gate_passed = true;
        break;
      }
    }
    epoch_offset += epochs_run;
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.stages.push_back({k, t, final_loss, w1, epochs_run, gate_passed, wall});
  }
  return result;
}

namespace {

std::vector<double> interval_masses(const Tensor& samples, const DistributionSpec& target) {
  std::vector<double> masses;
  if (const auto* u = std::get_if<UnionOfIntervals>(&target)) {
    for (const auto& p : u->parts) {
      std::size_t count = 0;
      for (double v : samples.data)
        if (v >= p.lo && v <= p.hi) ++count;
      masses.push_back(static_cast<double>(count) / static_cast<double>(samples.rows()));
    }
  }
  return masses;
}

ArmResult run_arm(const CurriculumSchedule& schedule, const DistributionSpec& mu0,
                  const Tensor& data, const DistributionSpec& target_spec,
                  const MlpParams& model_template, std::uint64_t seed) {
  MlpParams model = model_template;
  Rng rng(seed);
  CurriculumResult cr = run_curriculum(schedule, mu0, data, model, rng);

  Rng eval_rng = rng.fork(0xE5A1ULL);
  Tensor z = sample(mu0, schedule.eval_samples, eval_rng);
  Tensor pushed = mlp_forward(model, z);

  ArmResult arm;
  arm.history = std::move(cr.history);
  arm.stages = std::move(cr.stages);
  arm.final_w1 = wasserstein1(pushed, data);
  arm.interval_masses = interval_masses(pushed, target_spec);
  return arm;
}

}  // namespace

ComparisonReport compare_direct_vs_curriculum(const CurriculumSchedule& schedule,
                                              const DistributionSpec& mu0, const Tensor& data,
                                              const DistributionSpec& target_spec,
                                              const MlpParams& model_template,
                                              std::uint64_t seed) {
  schedule.validate();
  CurriculumSchedule direct = schedule;
  direct.times = {0.0};
  // same total budget for both arms
  direct.epochs_per_stage = schedule.epochs_per_stage * schedule.times.size();

  ComparisonReport report;
  report.direct = run_arm(direct, mu0, data, target_spec, model_template, seed);
  report.curriculum = run_arm(schedule, mu0, data, target_spec, model_template, seed);
  return report;
}

}  // namespace pf
