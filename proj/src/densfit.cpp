#include "pushforward/densfit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "pushforward/errors.hpp"
#include "pushforward/tape.hpp"

namespace pf {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double softplus_inv(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }

// solve f(w) = target for increasing f on [lo, hi] to ~1e-12
double bisect_increasing(const std::function<double(double)>& f, double target, double lo,
                         double hi) {
  double flo = f(lo), fhi = f(hi);
  if (target < flo || target > fhi) return kNan;
  for (int i = 0; i < 120; ++i) {
    double mid = 0.5 * (lo + hi);
    if (f(mid) < target)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-13 * (1.0 + std::abs(lo))) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

AnalyticMonotoneMap::AnalyticMonotoneMap(std::function<double(double)> fwd,
                                         std::function<double(double)> deriv, double domain_lo,
                                         double domain_hi)
    : fwd_(std::move(fwd)), deriv_(std::move(deriv)), lo_(domain_lo), hi_(domain_hi) {}

double AnalyticMonotoneMap::inverse(double x) const {
  return bisect_increasing(fwd_, x, lo_, hi_);
}

double AnalyticMonotoneMap::inverse_derivative(double x) const {
  double z = inverse(x);
  if (!std::isfinite(z)) return kNan;
  return 1.0 / deriv_(z);
}

MonotoneNet::MonotoneNet(std::size_t hidden, double center_lo, double center_hi)
    : bias(Tensor::scalar(0.0)),
      slope_raw(Tensor::scalar(softplus_inv(1.0))),
      v_raw({1, hidden}),
      w_raw({1, hidden}),
      centers({1, hidden}),
      hidden_(hidden) {
  // ridge width matched to the center spacing so each unit is locally
  // responsive rather than a near-linear ramp; tiny v keeps the start near
  // the identity
  double spacing = hidden > 1 ? (center_hi - center_lo) / (hidden - 1.0) : 1.0;
  double width = std::max(1.0, 2.0 / std::max(spacing, 1e-9));
  for (std::size_t j = 0; j < hidden; ++j) {
    v_raw[j] = softplus_inv(0.01);
    w_raw[j] = softplus_inv(width);
    double c = hidden == 1 ? 0.5 * (center_lo + center_hi)
                           : center_lo + (center_hi - center_lo) * j / (hidden - 1.0);
    centers[j] = -width * c;  // tanh(w x + c_j) centered at x = c
  }
}

double MonotoneNet::eta(double x) const {
  double y = bias[0] + softplus(slope_raw[0]) * x;
  for (std::size_t j = 0; j < hidden_; ++j)
    y += softplus(v_raw[j]) * std::tanh(softplus(w_raw[j]) * x + centers[j]);
  return y;
}

double MonotoneNet::eta_prime(double x) const {
  double d = softplus(slope_raw[0]);
  for (std::size_t j = 0; j < hidden_; ++j) {
    double th = std::tanh(softplus(w_raw[j]) * x + centers[j]);
    d += softplus(v_raw[j]) * softplus(w_raw[j]) * (1.0 - th * th);
  }
  return d;
}

double MonotoneNet::forward(double z) const {
  // eta has slope >= softplus(slope_raw) > 0, so a bracket always exists
  double lo = -1.0, hi = 1.0;
  while (eta(lo) > z) lo = lo * 2.0 - 1.0;
  while (eta(hi) < z) hi = hi * 2.0 + 1.0;
  return bisect_increasing([this](double w) { return eta(w); }, z, lo, hi);
}

double MonotoneNet::forward_derivative(double z) const {
  return 1.0 / eta_prime(forward(z));
}

std::vector<Tensor*> MonotoneNet::parameters() {
  if (hidden_ == 0) return {&bias, &slope_raw};
  return {&bias, &slope_raw, &v_raw, &w_raw, &centers};
}

std::vector<const Tensor*> MonotoneNet::parameters() const {
  if (hidden_ == 0) return {&bias, &slope_raw};
  return {&bias, &slope_raw, &v_raw, &w_raw, &centers};
}

double pushforward_log_density(const MonotoneMap1D& map, const DistributionSpec& base,
                               double x) {
  double z = map.inverse(x);
  if (!std::isfinite(z)) return -kInf;
  double dz = map.inverse_derivative(x);
  if (!(dz > 0.0) || !std::isfinite(dz)) return -kInf;
  return log_density(base, z) + std::log(dz);
}

namespace {

// negative mean log-likelihood of the data under the pushforward density,
// standard-Gaussian base; plain evaluation used by the line search (tanh
// shared between the map and its derivative)
double net_nll(const MonotoneNet& net, const Tensor& data) {
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  const std::size_t h = net.hidden();
  std::vector<double> v(h), w(h);
  for (std::size_t j = 0; j < h; ++j) {
    v[j] = softplus(net.v_raw[j]);
    w[j] = softplus(net.w_raw[j]);
  }
  const double alpha = softplus(net.slope_raw[0]);
  const double b = net.bias[0];
  double acc = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    double x = data[i];
    double z = b + alpha * x;
    double dz = alpha;
    for (std::size_t j = 0; j < h; ++j) {
      double th = std::tanh(w[j] * x + net.centers[j]);
      z += v[j] * th;
      dz += v[j] * w[j] * (1.0 - th * th);
    }
    acc += 0.5 * z * z + half_log_2pi - std::log(dz);
  }
  return acc / static_cast<double>(data.rows());
}

struct NetOnTape {
  std::vector<Var> params;  // same order as MonotoneNet::parameters()
  Var nll;
};

NetOnTape net_nll_tape(Tape& t, const MonotoneNet& net, const Tensor& data) {
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  NetOnTape out;
  Var x = t.input(data);  // [n,1]
  Var b = t.input(net.bias);
  Var a_raw = t.input(net.slope_raw);
  out.params = {b, a_raw};
  Var alpha = t.softplus(a_raw);
  Var eta;
  Var eta_prime;
  if (net.hidden() == 0) {
    eta = t.add_scalarvar(t.mul_scalarvar(x, alpha), b);
    // eta' is the constant alpha broadcast over the batch
    Var ones = t.input(Tensor::full({data.rows(), 1}, 1.0));
    eta_prime = t.mul_scalarvar(ones, alpha);
  } else {
    Var v_raw = t.input(net.v_raw);
    Var w_raw = t.input(net.w_raw);
    Var c = t.input(net.centers);
    out.params.push_back(v_raw);
    out.params.push_back(w_raw);
    out.params.push_back(c);
    Var v = t.softplus(v_raw);
    Var w = t.softplus(w_raw);
    // pre-activation [n,H] = x * w + c
    Var pre = t.add_rowvec(t.matmul(x, w), c);
    Var th = t.tanh(pre);
    eta = t.add_scalarvar(t.add(t.row_sums(t.mul_rowvec(th, v)), t.mul_scalarvar(x, alpha)), b);
    Var sech2 = t.affine(t.square(th), -1.0, 1.0);
    Var vw = t.mul(v, w);  // [1,H]
    eta_prime = t.add_scalarvar(t.row_sums(t.mul_rowvec(sech2, vw)), alpha);
  }
  Var ll = t.add(t.add_const(t.scale(t.square(eta), -0.5), -half_log_2pi), t.log(eta_prime));
  out.nll = t.scale(t.mean_all(ll), -1.0);
  return out;
}

}  // namespace

MonotoneFitResult fit_mle(const DistributionSpec& base, const Tensor& data,
                          const MonotoneFitConfig& cfg) {
  if (data.rows() < 1000)
    throw ContractError("fit_mle: need at least 1000 data points, got " +
                        std::to_string(data.rows()));
  if (data.cols() != 1) throw UnsupportedError("fit_mle: 1-D data only");
  if (!std::holds_alternative<StdGaussian>(base) || dim(base) != 1)
    throw UnsupportedError("fit_mle: training supports the standard 1-D Gaussian base");

  // spread ridge centers over the data range so capacity lands where the
  // mass is
  std::vector<double> sorted(data.data);
  std::sort(sorted.begin(), sorted.end());
  double lo = cfg.hidden > 0 ? sorted[static_cast<std::size_t>(0.005 * (sorted.size() - 1))]
                             : cfg.center_lo;
  double hi = cfg.hidden > 0 ? sorted[static_cast<std::size_t>(0.995 * (sorted.size() - 1))]
                             : cfg.center_hi;

  MonotoneFitResult res{MonotoneNet(cfg.hidden, lo, hi), {}, 0};
  MonotoneNet& net = res.map;

  // template sanity: derivative must be strictly positive where the data live
  for (std::size_t i = 0; i < 32; ++i) {
    double x = sorted.front() + (sorted.back() - sorted.front()) * i / 31.0;
    double d = net.eta_prime(x);
    if (!(d > 0.0) || !std::isfinite(d))
      throw ContractError("fit_mle: template map is not strictly monotone");
  }

  double step = cfg.initial_step;
  double current = net_nll(net, data);
  res.nll_history.push_back(current);

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    Tape tape;
    NetOnTape nt = net_nll_tape(tape, net, data);
    tape.backward(nt.nll);
    std::vector<Tensor> grads;
    for (Var p : nt.params) grads.push_back(tape.adjoint(p));

    auto params = net.parameters();
    std::vector<Tensor> saved;
    for (Tensor* p : params) saved.push_back(*p);

    bool accepted = false;
    for (int backtrack = 0; backtrack < 40; ++backtrack) {
      for (std::size_t k = 0; k < params.size(); ++k)
        for (std::size_t i = 0; i < params[k]->size(); ++i)
          (*params[k])[i] = saved[k][i] - step * grads[k][i];
      double trial = net_nll(net, data);
      if (std::isfinite(trial) && trial <= current) {
        current = trial;
        accepted = true;
        step = std::min(step * 1.25, cfg.max_step);
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      for (std::size_t k = 0; k < params.size(); ++k) *params[k] = saved[k];
      break;
    }
    res.nll_history.push_back(current);
    res.epochs = epoch + 1;
    if (res.nll_history.size() >= 2) {
      double drop = res.nll_history[res.nll_history.size() - 2] - current;
      if (drop < cfg.tol) break;
    }
  }
  return res;
}

// ---- linear-Gaussian testbed ----

double elbo(const LinearGaussianModel& model, double x, double q_mean, double q_var) {
  if (!(q_var > 0.0)) throw DomainError("elbo: variational variance must be positive");
  const double a = model.loading;
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  double expected_log_joint = -0.5 * log_2pi - 0.5 * (q_mean * q_mean + q_var) -
                              0.5 * log_2pi -
                              0.5 * ((x - a * q_mean) * (x - a * q_mean) + a * a * q_var);
  double entropy = 0.5 * (log_2pi + 1.0 + std::log(q_var));
  return expected_log_joint + entropy;
}

double log_marginal(const LinearGaussianModel& model, double x) {
  const double var = model.loading * model.loading + 1.0;
  return -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * x * x / var;
}

std::pair<double, double> posterior(const LinearGaussianModel& model, double x) {
  const double a = model.loading;
  const double denom = a * a + 1.0;
  return {a * x / denom, 1.0 / denom};
}

double kl_to_posterior(const LinearGaussianModel& model, double x, double q_mean,
                       double q_var) {
  if (!(q_var > 0.0)) throw DomainError("kl_to_posterior: variance must be positive");
  auto [pm, pv] = posterior(model, x);
  return 0.5 * (q_var / pv + (q_mean - pm) * (q_mean - pm) / pv - 1.0 + std::log(pv / q_var));
}

ElboFitResult fit_elbo(const LinearGaussianModel& model, double x, double init_mean,
                       double init_var, double step, int max_iterations, double grad_tol,
                       std::vector<ElboIterate>* trace) {
  if (!(init_var > 0.0)) throw DomainError("fit_elbo: initial variance must be positive");
  const double a = model.loading;
  double m = init_mean;
  double ell = std::log(init_var);  // optimize log-variance, keeps q_var > 0
  int it = 0;
  for (; it < max_iterations; ++it) {
    double s2 = std::exp(ell);
    if (trace && it % 100 == 0) trace->push_back({it, elbo(model, x, m, s2)});
    double dm = -m * (1.0 + a * a) + a * x;
    double dell = 0.5 - 0.5 * s2 * (1.0 + a * a);
    m += step * dm;
    ell += step * dell;
    if (std::abs(dm) < grad_tol && std::abs(dell) < grad_tol) break;
  }
  double s2 = std::exp(ell);
  if (trace) trace->push_back({it, elbo(model, x, m, s2)});
  return {m, s2, elbo(model, x, m, s2), it};
}

}  // namespace pf
