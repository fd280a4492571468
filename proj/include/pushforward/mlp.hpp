#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pushforward/rng.hpp"
#include "pushforward/tape.hpp"
#include "pushforward/tensor.hpp"

namespace pf {

enum class Activation { Tanh, Relu };
enum class OutputActivation { Identity, Sigmoid, Tanh };

// Small fully-connected network used as the pushforward map. Weights are
// stored [in,out] so a batch [n,in] maps by plain row-major matmul.
struct MlpParams {
  struct Layer {
    Tensor weight;  // [in, out]
    Tensor bias;    // [1, out]
  };
  std::vector<Layer> layers;
  Activation hidden = Activation::Tanh;
  OutputActivation output = OutputActivation::Identity;

  // Glorot-uniform initialization from the run seed.
  static MlpParams init(const std::vector<std::size_t>& sizes, Activation hidden,
                        OutputActivation output, Rng& rng);

  std::size_t input_dim() const { return layers.front().weight.rows(); }
  std::size_t output_dim() const { return layers.back().weight.cols(); }
  std::size_t param_count() const;

  // Pointers to every parameter tensor, layer by layer (weight then bias).
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;

  // Throws ShapeError naming the offending layer if consecutive layer
  // dimensions do not chain.
  void validate() const;
};

// Batch forward pass, no tape. Deterministic: identical params and input
// give bitwise-identical output.
Tensor mlp_forward(const MlpParams& params, const Tensor& x);

// Forward pass recorded on a tape; parameter leaves are exposed so the
// caller can read their adjoints after backward().
struct MlpOnTape {
  std::vector<Var> weights;
  std::vector<Var> biases;
  Var out;
};
MlpOnTape mlp_forward(Tape& tape, const MlpParams& params, Var x);
MlpOnTape mlp_forward(Tape& tape, const MlpParams& params, const Tensor& x);

// Gradients per parameter in parameters() order, read off the tape.
std::vector<Tensor> mlp_gradients(const Tape& tape, const MlpOnTape& net);

// ---- optimizers ----

struct AdamConfig {
  double step = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}
  void step(std::vector<Tensor*> params, const std::vector<Tensor>& grads);
  void reset();

 private:
  AdamConfig cfg_;
  std::vector<Tensor> m_, v_;
  long t_ = 0;
};

struct SgdConfig {
  double step = 1e-2;
  double momentum = 0.0;
};

class SgdMomentum {
 public:
  explicit SgdMomentum(SgdConfig cfg = {}) : cfg_(cfg) {}
  void step(std::vector<Tensor*> params, const std::vector<Tensor>& grads);

 private:
  SgdConfig cfg_;
  std::vector<Tensor> velocity_;
};

}  // namespace pf
