#pragma once

#include <cstddef>
#include <functional>
#include <variant>
#include <vector>

#include "pushforward/distributions.hpp"
#include "pushforward/pairwise.hpp"
#include "pushforward/rng.hpp"
#include "pushforward/tensor.hpp"

namespace pf {

// Energy landscape driving the diffusion dX = -grad E(X) dt + sqrt(2) dB.
struct QuadraticPotential {};  // E(x) = |x|^2 / 2

struct TabulatedPotential {  // 1-D, linear interpolation between nodes
  std::vector<double> xs;
  std::vector<double> energy;
  std::vector<double> grad;
};

using PotentialSpec = std::variant<QuadraticPotential, TabulatedPotential>;

double potential_gradient(const PotentialSpec& potential, double x);

struct ParticleEnsemble {
  Tensor positions;  // [n, d]
  double time = 0.0;
};

// Euler-Maruyama for `t_end` units of time with step `dt` (a shorter final
// step lands exactly on t_end). Each particle advances on its own forked
// RNG stream, so results are bitwise identical for any thread count.
// t_end == 0 returns the ensemble unchanged.
ParticleEnsemble simulate_sde(const PotentialSpec& potential, const ParticleEnsemble& start,
                              double t_end, double dt, Rng& rng, Exec exec = default_exec());

// Gaussian(-mixture) marginal of the unit-quadratic diffusion started from
// a Gaussian-family law: per component m_t = e^-t m0,
// var_t = e^-2t var0 + 1 - e^-2t.
struct GaussianFlowState {
  double t = 0.0;
  struct Component {
    double mean, var, weight;
  };
  std::vector<Component> components;

  double density(double x) const;
  double grad_log_density(double x) const;
};

// mu1 must be StdGaussian(1) or a GaussianMixture; anything else throws
// UnsupportedError (use the particle path or the empirical closure below).
GaussianFlowState ou_flow_state(const DistributionSpec& mu1, double t);

// Each data atom becomes a Gaussian component of variance 1 - e^-2t;
// requires t > 0.
GaussianFlowState ou_flow_state_empirical(const Tensor& data, double t);

// v(x) = -x - d/dx log r_t(x) for the quadratic potential. Throws
// DomainError on degenerate component variance.
double velocity_field(const GaussianFlowState& state, double x);

// Classic fixed-step RK4 for dx/dt = v(t, x); t_to < t_from integrates in
// reverse. Throws NumericError (with t and x) if the velocity turns
// non-finite.
using VelocityFn = std::function<double(double t, double x)>;
double integrate_ode_point(const VelocityFn& velocity, double x0, double t_from, double t_to,
                           int steps);
Tensor integrate_ode(const VelocityFn& velocity, const Tensor& x0, double t_from, double t_to,
                     int steps, Exec exec = default_exec());

// Max over an x-grid of |d_t r + d_x (v r)| by central differences at time
// t0; second order in both spacings.
double continuity_residual(const std::function<GaussianFlowState(double)>& state_at, double t0,
                           double x_lo, double x_hi, std::size_t grid_points, double dx,
                           double dt);

// Probabilists' Hermite polynomial He_k.
double hermite_value(int k, double x);

// Monte-Carlo estimates of <He_k, rho_t> on analytically noised samples,
// next to the e^{-kt}-decayed time-zero moment they should match.
struct HermiteDecayRow {
  double t;
  double estimate;
  double predicted;
  double mc_sigma;  // standard error of the estimate
};
std::vector<HermiteDecayRow> hermite_decay(const DistributionSpec& mu1, int k,
                                           const std::vector<double>& times, std::size_t n,
                                           Rng& rng);

}  // namespace pf
