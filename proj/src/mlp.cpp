#include "pushforward/mlp.hpp"

#include <cmath>
#include <string>

namespace pf {

MlpParams MlpParams::init(const std::vector<std::size_t>& sizes, Activation hidden,
                          OutputActivation output, Rng& rng) {
  if (sizes.size() < 2) throw ContractError("MlpParams::init: need at least one layer");
  MlpParams p;
  p.hidden = hidden;
  p.output = output;
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    std::size_t fan_in = sizes[k], fan_out = sizes[k + 1];
    double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Layer layer{Tensor({fan_in, fan_out}), Tensor({1, fan_out})};
    for (double& w : layer.weight.data) w = rng.uniform(-bound, bound);
    p.layers.push_back(std::move(layer));
  }
  p.validate();
  return p;
}

std::size_t MlpParams::param_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

std::vector<Tensor*> MlpParams::parameters() {
  std::vector<Tensor*> out;
  for (Layer& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Tensor*> MlpParams::parameters() const {
  std::vector<const Tensor*> out;
  for (const Layer& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

void MlpParams::validate() const {
  if (layers.empty()) throw ContractError("MlpParams: no layers");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const Layer& l = layers[k];
    if (l.bias.rows() != 1 || l.bias.cols() != l.weight.cols())
      throw ShapeError("MlpParams: layer " + std::to_string(k) + " bias shape mismatch");
    if (k > 0 && layers[k - 1].weight.cols() != l.weight.rows())
      throw ShapeError("MlpParams: layer " + std::to_string(k) +
                       " expects input dim " + std::to_string(l.weight.rows()) +
                       " but layer " + std::to_string(k - 1) + " emits " +
                       std::to_string(layers[k - 1].weight.cols()));
  }
  if (param_count() == 0) throw ContractError("MlpParams: zero parameters");
}

namespace {

void apply_hidden(Activation act, Tensor& t) {
  switch (act) {
    case Activation::Tanh:
      for (double& v : t.data) v = std::tanh(v);
      break;
    case Activation::Relu:
      for (double& v : t.data) v = v > 0.0 ? v : 0.0;
      break;
  }
}

void apply_output(OutputActivation act, Tensor& t) {
  switch (act) {
    case OutputActivation::Identity:
      break;
    case OutputActivation::Sigmoid:
      for (double& v : t.data) v = 1.0 / (1.0 + std::exp(-v));
      break;
    case OutputActivation::Tanh:
      for (double& v : t.data) v = std::tanh(v);
      break;
  }
}

void check_input(const MlpParams& params, const Tensor& x) {
  if (x.rank() != 2 || x.cols() != params.input_dim())
    throw ShapeError("mlp_forward: input [" + std::to_string(x.rows()) + "," +
                     std::to_string(x.cols()) + "] does not match layer 0 in-dim " +
                     std::to_string(params.input_dim()));
}

}  // namespace

Tensor mlp_forward(const MlpParams& params, const Tensor& x) {
  params.validate();
  check_input(params, x);
  Tensor h = x;
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    const MlpParams::Layer& l = params.layers[k];
    const std::size_t n = h.rows(), in = l.weight.rows(), out = l.weight.cols();
    Tensor y({n, out});
#pragma omp parallel for if (n * in * out > 16384)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
      for (std::size_t j = 0; j < out; ++j) {
        double s = l.bias[j];
        for (std::size_t p = 0; p < in; ++p) s += h(i, p) * l.weight(p, j);
        y(i, j) = s;
      }
    }
    if (k + 1 < params.layers.size())
      apply_hidden(params.hidden, y);
    else
      apply_output(params.output, y);
    h = std::move(y);
  }
  return h;
}

MlpOnTape mlp_forward(Tape& tape, const MlpParams& params, Var x) {
  params.validate();
  check_input(params, tape.value(x));
  MlpOnTape net;
  Var h = x;
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    const MlpParams::Layer& l = params.layers[k];
    Var w = tape.input(l.weight);
    Var b = tape.input(l.bias);
    net.weights.push_back(w);
    net.biases.push_back(b);
    Var pre = tape.add_rowvec(tape.matmul(h, w), b);
    if (k + 1 < params.layers.size()) {
      h = params.hidden == Activation::Tanh ? tape.tanh(pre) : tape.relu(pre);
    } else {
      switch (params.output) {
        case OutputActivation::Identity: h = pre; break;
        case OutputActivation::Sigmoid: h = tape.sigmoid(pre); break;
        case OutputActivation::Tanh: h = tape.tanh(pre); break;
      }
    }
  }
  net.out = h;
  return net;
}

MlpOnTape mlp_forward(Tape& tape, const MlpParams& params, const Tensor& x) {
  return mlp_forward(tape, params, tape.input(x));
}

std::vector<Tensor> mlp_gradients(const Tape& tape, const MlpOnTape& net) {
  std::vector<Tensor> grads;
  grads.reserve(net.weights.size() * 2);
  for (std::size_t k = 0; k < net.weights.size(); ++k) {
    grads.push_back(tape.adjoint(net.weights[k]));
    grads.push_back(tape.adjoint(net.biases[k]));
  }
  return grads;
}

void Adam::reset() {
  m_.clear();
  v_.clear();
  t_ = 0;
}

void Adam::step(std::vector<Tensor*> params, const std::vector<Tensor>& grads) {
  if (params.size() != grads.size())
    throw ContractError("Adam::step: params/grads count mismatch");
  if (m_.empty()) {
    for (Tensor* p : params) {
      m_.push_back(Tensor(p->shape));
      v_.push_back(Tensor(p->shape));
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    const Tensor& g = grads[k];
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      double mh = m[i] / bc1;
      double vh = v[i] / bc2;
      p[i] -= cfg_.step * mh / (std::sqrt(vh) + cfg_.eps);
    }
  }
}

void SgdMomentum::step(std::vector<Tensor*> params, const std::vector<Tensor>& grads) {
  if (params.size() != grads.size())
    throw ContractError("SgdMomentum::step: params/grads count mismatch");
  if (velocity_.empty())
    for (Tensor* p : params) velocity_.push_back(Tensor(p->shape));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    const Tensor& g = grads[k];
    Tensor& vel = velocity_[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      vel[i] = cfg_.momentum * vel[i] - cfg_.step * g[i];
      p[i] += vel[i];
    }
  }
}

}  // namespace pf
