#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "pushforward/distributions.hpp"
#include "pushforward/mlp.hpp"
#include "pushforward/statmatch.hpp"

namespace pf {

// Runtime-selected sample-matching objective ("fourier", "charfn",
// "mmd-gauss", "energy"); the keys and parameters mirror the config file.
struct ObjectiveConfig {
  std::string key = "fourier";
  std::vector<int> frequencies = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  double interval_lo = 0.0, interval_hi = 1.0;
  std::vector<double> ts;  // charfn frequencies
  double bandwidth = 1.0;  // mmd-gauss
  Estimator estimator = Estimator::Biased;
};

bool is_sample_objective_key(const std::string& key);

class SampleObjective {
 public:
  explicit SampleObjective(ObjectiveConfig cfg);

  const ObjectiveConfig& config() const { return cfg_; }
  void set_targets(Tensor y) { targets_ = std::move(y); }
  const Tensor& targets() const { return targets_; }

  Var loss(Tape& tape, Var x) const;
  double evaluate(const Tensor& x) const;

 private:
  ObjectiveConfig cfg_;
  Tensor targets_;
};

struct TrainConfig {
  std::size_t epochs = 5000;
  std::size_t batch = 512;
  AdamConfig adam;
  std::size_t eval_every = 0;  // 0 = no metric evaluations
  std::function<double(const MlpParams&, std::size_t epoch)> metric;
};

struct EpochRecord {
  std::size_t epoch;
  double loss;
  double metric = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
  std::vector<EpochRecord> history;
  double final_loss = 0.0;
};

// Per-epoch targets (e.g. freshly noised data) come from `target_provider`.
// Draws base samples and target noise from forked substreams of `rng`, so a
// run is a pure function of (model, config, rng seed). On a non-finite loss
// the model is restored to the last finite-loss parameters and NumericError
// is thrown naming the epoch.
TrainResult train_pushforward(MlpParams& model, const DistributionSpec& base,
                              const std::function<Tensor(std::size_t epoch, Rng&)>& target_provider,
                              SampleObjective& objective, const TrainConfig& cfg, Rng& rng);

}  // namespace pf
