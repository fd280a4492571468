#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "pushforward/distributions.hpp"
#include "pushforward/tensor.hpp"

namespace pf {

// Strictly increasing scalar map psi with both directions available. The
// trainable implementation parameterizes the inverse direction in closed
// form and recovers the forward map by bisection (to 1e-10); the analytic
// wrapper does the opposite.
class MonotoneMap1D {
 public:
  virtual ~MonotoneMap1D() = default;
  virtual double forward(double z) const = 0;             // psi
  virtual double forward_derivative(double z) const = 0;  // psi' > 0
  virtual double inverse(double x) const = 0;             // psi^-1 (NaN outside range)
  virtual double inverse_derivative(double x) const = 0;  // (psi^-1)'(x)
};

// Wraps explicit (psi, psi') callables; inverse by bracketed bisection on
// [domain_lo, domain_hi].
class AnalyticMonotoneMap final : public MonotoneMap1D {
 public:
  AnalyticMonotoneMap(std::function<double(double)> fwd, std::function<double(double)> deriv,
                      double domain_lo = -1e6, double domain_hi = 1e6);
  double forward(double z) const override { return fwd_(z); }
  double forward_derivative(double z) const override { return deriv_(z); }
  double inverse(double x) const override;
  double inverse_derivative(double x) const override;

 private:
  std::function<double(double)> fwd_, deriv_;
  double lo_, hi_;
};

// Trainable monotone map. Internally a positive-slope ridge network eta in
// the data-to-base direction:
//   eta(x) = b + softplus(a) x + sum_j softplus(v_j) tanh(softplus(w_j) x + c_j)
// eta' > 0 everywhere by construction, so psi = eta^-1 exists on all of R.
class MonotoneNet final : public MonotoneMap1D {
 public:
  // hidden == 0 gives the affine template b + softplus(a) x. Ridge centers
  // are spread uniformly over [center_lo, center_hi]. Initialization is
  // deterministic and close to the identity.
  explicit MonotoneNet(std::size_t hidden = 16, double center_lo = -2.0, double center_hi = 2.0);

  double eta(double x) const;        // inverse-direction map
  double eta_prime(double x) const;  // > 0

  double forward(double z) const override;  // bisection on eta
  double forward_derivative(double z) const override;
  double inverse(double x) const override { return eta(x); }
  double inverse_derivative(double x) const override { return eta_prime(x); }

  std::size_t hidden() const { return hidden_; }
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;

  // raw parameters; exposed for the MLE trainer and tests
  Tensor bias;       // [1,1]
  Tensor slope_raw;  // [1,1], slope = softplus
  Tensor v_raw;      // [1,H]
  Tensor w_raw;      // [1,H]
  Tensor centers;    // [1,H]

 private:
  std::size_t hidden_;
};

// log p(x) = log p0(psi^-1(x)) + log (psi^-1)'(x); -inf outside the range
// of psi.
double pushforward_log_density(const MonotoneMap1D& map, const DistributionSpec& base,
                               double x);

struct MonotoneFitConfig {
  std::size_t hidden = 16;
  double center_lo = -2.0, center_hi = 2.0;
  int max_epochs = 2000;
  double initial_step = 0.25;
  double max_step = 16.0;
  double tol = 1e-12;  // stop when the accepted NLL improvement falls below
};

struct MonotoneFitResult {
  MonotoneNet map;
  std::vector<double> nll_history;  // accepted steps only, non-increasing
  int epochs = 0;
};

// Maximum-likelihood fit of the pushforward map from `base` to the law of
// `data` (full-batch gradient descent with backtracking, so the recorded
// NLL never increases). Requires >= 1000 data points and a standard
// Gaussian base.
MonotoneFitResult fit_mle(const DistributionSpec& base, const Tensor& data,
                          const MonotoneFitConfig& cfg = {});

// ---- linear-Gaussian latent testbed ----
// z ~ N(0,1), x | z ~ N(loading * z, 1). Everything below is closed form.

struct LinearGaussianModel {
  double loading = 1.0;
};

// E_{z~q}[log p(x,z) - log q(z)] for q = N(q_mean, q_var).
double elbo(const LinearGaussianModel& model, double x, double q_mean, double q_var);
double log_marginal(const LinearGaussianModel& model, double x);
std::pair<double, double> posterior(const LinearGaussianModel& model, double x);
double kl_to_posterior(const LinearGaussianModel& model, double x, double q_mean, double q_var);

struct ElboFitResult {
  double q_mean, q_var;
  double final_elbo;
  int iterations;
};
struct ElboIterate {
  int iteration;
  double elbo;
};
// Gradient ascent on (mean, log variance); converges to the analytic
// posterior. `trace`, when given, records the objective every ~100
// iterations.
ElboFitResult fit_elbo(const LinearGaussianModel& model, double x, double init_mean,
                       double init_var, double step = 0.1, int max_iterations = 200000,
                       double grad_tol = 1e-13, std::vector<ElboIterate>* trace = nullptr);

}  // namespace pf
