#include "pushforward/train.hpp"

#include <cmath>
#include <string>

#include "pushforward/errors.hpp"

namespace pf {

bool is_sample_objective_key(const std::string& key) {
  return key == "fourier" || key == "charfn" || key == "mmd-gauss" || key == "energy";
}

SampleObjective::SampleObjective(ObjectiveConfig cfg) : cfg_(std::move(cfg)) {
  if (!is_sample_objective_key(cfg_.key))
    throw ConfigError("objective: unknown key \"" + cfg_.key + "\"");
  if (cfg_.key == "fourier") {
    make_fourier_family(cfg_.frequencies, cfg_.interval_lo, cfg_.interval_hi);  // validates
  } else if (cfg_.key == "charfn") {
    if (cfg_.ts.empty()) throw ConfigError("objective charfn: needs ts");
  } else if (cfg_.key == "mmd-gauss") {
    if (!(cfg_.bandwidth > 0.0)) throw ConfigError("objective mmd-gauss: bandwidth must be > 0");
  }
}

Var SampleObjective::loss(Tape& tape, Var x) const {
  if (targets_.size() == 0) throw ContractError("SampleObjective: targets not set");
  if (cfg_.key == "fourier") {
    TestFunctionFamily fam =
        make_fourier_family(cfg_.frequencies, cfg_.interval_lo, cfg_.interval_hi);
    return moment_discrepancy_loss(tape, x, fam, targets_, cfg_.estimator);
  }
  if (cfg_.key == "charfn") {
    ExponentialMoments fam;
    fam.ts = cfg_.ts;
    fam.imaginary_axis = true;
    return moment_discrepancy_loss(tape, x, fam, targets_, cfg_.estimator);
  }
  if (cfg_.key == "mmd-gauss") {
    return mmd_loss(tape, x, targets_, KernelSpec{KernelSpec::Type::Gaussian, cfg_.bandwidth},
                    cfg_.estimator);
  }
  return energy_loss(tape, x, targets_, cfg_.estimator);
}

double SampleObjective::evaluate(const Tensor& x) const {
  if (targets_.size() == 0) throw ContractError("SampleObjective: targets not set");
  if (cfg_.key == "fourier") {
    TestFunctionFamily fam =
        make_fourier_family(cfg_.frequencies, cfg_.interval_lo, cfg_.interval_hi);
    return moment_discrepancy(fam, x, targets_, cfg_.estimator);
  }
  if (cfg_.key == "charfn") {
    ExponentialMoments fam;
    fam.ts = cfg_.ts;
    fam.imaginary_axis = true;
    return moment_discrepancy(fam, x, targets_, cfg_.estimator);
  }
  if (cfg_.key == "mmd-gauss") {
    return mmd_squared(KernelSpec{KernelSpec::Type::Gaussian, cfg_.bandwidth}, x, targets_,
                       cfg_.estimator);
  }
  return energy_distance(x, targets_, cfg_.estimator);
}

TrainResult train_pushforward(MlpParams& model, const DistributionSpec& base,
                              const std::function<Tensor(std::size_t, Rng&)>& target_provider,
                              SampleObjective& objective, const TrainConfig& cfg, Rng& rng) {
  if (cfg.epochs < 1) throw ContractError("train_pushforward: epochs must be >= 1");
  Rng rng_base = rng.fork(0x6261736531ULL);
  Rng rng_targets = rng.fork(0x746172676574ULL);

  Adam opt(cfg.adam);
  TrainResult result;
  MlpParams last_good = model;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    objective.set_targets(target_provider(epoch, rng_targets));
    Tensor z = sample(base, cfg.batch, rng_base);

    Tape tape;
    MlpOnTape net = mlp_forward(tape, model, z);
    Var loss = objective.loss(tape, net.out);
    double loss_value = tape.value(loss)[0];
    if (!std::isfinite(loss_value)) {
      model = last_good;
      throw NumericError("train_pushforward: non-finite loss at epoch " +
                         std::to_string(epoch) + "; parameters restored to last checkpoint");
    }
    last_good = model;
    tape.backward(loss);
    std::vector<Tensor> grads = mlp_gradients(tape, net);
    opt.step(model.parameters(), grads);

    EpochRecord rec{epoch, loss_value};
    if (cfg.eval_every > 0 && cfg.metric &&
        (epoch % cfg.eval_every == 0 || epoch + 1 == cfg.epochs))
      rec.metric = cfg.metric(model, epoch);
    result.history.push_back(rec);
    result.final_loss = loss_value;
  }
  return result;
}

}  // namespace pf
