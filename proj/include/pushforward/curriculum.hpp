#pragma once

#include <cstddef>
#include <vector>

#include "pushforward/train.hpp"

namespace pf {

// Decreasing noising times ending exactly at 0; one training stage per
// time, warm-starting from the previous stage's parameters.
struct CurriculumSchedule {
  std::vector<double> times;
  std::size_t epochs_per_stage = 2000;
  ObjectiveConfig objective;
  AdamConfig adam;
  std::size_t batch = 512;
  double stage_threshold = 0.05;  // W1 gate before advancing
  int retry_cap = 3;              // extra epoch blocks when the gate fails
  std::size_t eval_samples = 10000;
  // widen a fourier objective's interval to the analytic noising envelope of
  // the data range at each stage (it shrinks back to the configured interval
  // at t = 0)
  bool adapt_interval = true;

  void validate() const;
};

// t0 * ratio^k for the first `stages - 1` entries, then 0.
std::vector<double> geometric_schedule(double t0, double ratio, std::size_t stages);

struct StageReport {
  std::size_t stage;
  double t;
  double final_loss;
  double w1_to_stage_target;
  std::size_t epochs_run;
  bool gate_passed;
  double wall_seconds;  // reporting only; excluded from deterministic artifacts
};

struct CurriculumResult {
  std::vector<StageReport> stages;
  std::vector<EpochRecord> history;  // concatenated across stages
};

// Trains `model` to push mu0 onto the law of `data`, one noising level at a
// time. Stage k trains against ou_noise(data, t_k) with fresh noise each
// epoch; the final stage (t = 0) trains against the raw data. Fully
// deterministic given (schedule, model, rng seed).
CurriculumResult run_curriculum(const CurriculumSchedule& schedule, const DistributionSpec& mu0,
                                const Tensor& data, MlpParams& model, Rng& rng);

// The two-arm experiment: direct training (single stage at t = 0) vs the
// curriculum, same seed, same template, same total epoch budget. Reports
// both trajectories without judging a winner.
struct ArmResult {
  std::vector<EpochRecord> history;
  std::vector<StageReport> stages;
  double final_w1;
  std::vector<double> interval_masses;  // pushforward mass per target interval
};

struct ComparisonReport {
  ArmResult direct;
  ArmResult curriculum;
};

ComparisonReport compare_direct_vs_curriculum(const CurriculumSchedule& schedule,
                                              const DistributionSpec& mu0, const Tensor& data,
                                              const DistributionSpec& target_spec,
                                              const MlpParams& model_template,
                                              std::uint64_t seed);

}  // namespace pf
