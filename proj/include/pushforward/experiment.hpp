#pragma once

#include <filesystem>
#include <iosfwd>

#include "pushforward/config.hpp"

namespace pf {

// Executes one experiment and writes report.json, metrics.csv and (per
// kind) map_grid.csv / samples.csv / stages.csv under out_dir. Outputs are
// a pure function of (config, seed): reruns are byte-identical. Progress
// notes (including wall-clock) go to `log` only.
void run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                    std::ostream& log);

struct Fig1Result {
  double w1;                // W1(pushforward of the base, target)
  double sup_distance;      // min over the two CDF branches of the sup gap on the grid
  bool passed;              // w1 <= threshold
  double threshold = 0.02;
};

// Trains the default small map from N(0,1) to U(0,1) with the mean-squared
// Fourier objective and emits the learned map next to the Gaussian CDF
// oracle. Writes the same artifact set as run_experiment.
Fig1Result reproduce_fig1(std::uint64_t seed, const std::filesystem::path& out_dir,
                          std::ostream& log);

// 17-significant-digit float formatting shared by every CSV writer (exact
// double round-trip).
std::string format_g17(double v);

}  // namespace pf
