#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pushforward/mlp.hpp"
#include "pushforward/rng.hpp"
#include "pushforward/tape.hpp"
#include "test_util.hpp"

using namespace pf;
using namespace pf::testutil;

TEST_CASE("tensor shape invariants") {
  Tensor t = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK(t(1, 2) == 6);
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0}), ShapeError);
}

TEST_CASE("scalar tape derivatives match analytic values") {
  // d/dx x^2 at 3 is 6
  {
    Tape t;
    Var x = t.input(Tensor::scalar(3.0));
    Var loss = t.square(x);
    t.backward(loss);
    CHECK(t.grad(x)[0] == doctest::Approx(6.0).epsilon(1e-14));
  }
  // d/dx sin(x) at 0 is 1
  {
    Tape t;
    Var x = t.input(Tensor::scalar(0.0));
    Var loss = t.sin(x);
    t.backward(loss);
    CHECK(t.grad(x)[0] == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("backward rejects non-scalar losses") {
  Tape t;
  Var x = t.input(Tensor::column({1.0, 2.0}));
  Var y = t.square(x);
  CHECK_THROWS_AS(t.backward(y), ContractError);
}

namespace {

// composite graph exercising every exported primitive; returns the loss node
Var composite_graph(Tape& t, Var va, Var vb, Var vr, Var vs) {
  Var m = t.add_rowvec(t.matmul(va, vb), vr);
  m = t.mul_scalarvar(t.tanh(m), vs);
  Var u = t.add(t.sigmoid(m), t.cos(m));
  Var w = t.mul(u, t.softplus(m));
  Var e = t.exp(t.scale(w, 0.25));
  Var lg = t.log(t.add_const(t.square(e), 1.0));
  Var rows = t.row_sums(t.sub(lg, t.sin(m)));
  return t.mean_all(t.add(rows, t.sqrt(t.add_const(t.square(rows), 0.5))));
}

}  // namespace

TEST_CASE("gradient check over randomized composite graphs") {
  // >= 100 randomized trials across the exported primitives
  Rng rng(2024);
  int trials = 0;
  for (int trial = 0; trial < 110; ++trial) {
    std::size_t n = 2 + rng.below(3);
    std::size_t k = 1 + rng.below(3);
    Tensor a({n, k}), b({k, n}), r({1, n}), s({1, 1});
    for (double& v : a.data) v = rng.normal();
    for (double& v : b.data) v = rng.normal();
    for (double& v : r.data) v = rng.normal();
    s[0] = 0.5 + rng.uniform();
    std::vector<Tensor> params = {a, b, r, s};

    Tape t;
    Var va = t.input(params[0]);
    Var vb = t.input(params[1]);
    Var vr = t.input(params[2]);
    Var vs = t.input(params[3]);
    Var loss = composite_graph(t, va, vb, vr, vs);
    t.backward(loss);
    std::vector<Tensor> autodiff = {t.grad(va), t.grad(vb), t.grad(vr), t.grad(vs)};

    auto scalar_value = [&](const std::vector<Tensor>& p) {
      Tape t2;
      Var loss2 = composite_graph(t2, t2.input(p[0]), t2.input(p[1]), t2.input(p[2]),
                                  t2.input(p[3]));
      return t2.value(loss2)[0];
    };
    std::vector<Tensor> fd = finite_difference_grads(scalar_value, params);
    CHECK(max_grad_rel_error(autodiff, fd) < 1e-4);
    ++trials;
  }
  CHECK(trials >= 100);
}

TEST_CASE("gradient linearity in the loss seed") {
  Rng rng(99);
  Tensor x0({3, 2});
  for (double& v : x0.data) v = rng.normal();
  const double a = 1.7, b = -0.6;

  auto grads_of = [&](double ca, double cb) {
    Tape t;
    Var x = t.input(x0);
    Var f = t.mean_all(t.square(t.tanh(x)));
    Var g = t.mean_all(t.exp(t.scale(x, 0.3)));
    Var loss = t.add(t.scale(f, ca), t.scale(g, cb));
    t.backward(loss);
    return t.grad(x);
  };

  Tensor combined = grads_of(a, b);
  Tensor only_f = grads_of(1.0, 0.0);
  Tensor only_g = grads_of(0.0, 1.0);
  for (std::size_t i = 0; i < combined.size(); ++i)
    CHECK(combined[i] == doctest::Approx(a * only_f[i] + b * only_g[i]).epsilon(1e-13));
}

TEST_CASE("mlp forward: identity and affine single layers") {
  MlpParams p;
  p.layers.push_back({Tensor::matrix(1, 1, {1.0}), Tensor::row({0.0})});
  p.output = OutputActivation::Identity;
  Tensor x({1, 1}, {3.0});
  CHECK(mlp_forward(p, x)[0] == 3.0);

  p.layers[0].weight[0] = 2.0;
  p.layers[0].bias[0] = 1.0;
  Tensor x2({1, 1}, {0.5});
  CHECK(mlp_forward(p, x2)[0] == 2.0);
}

TEST_CASE("mlp forward: zero-weight tanh layers propagate biases only") {
  MlpParams p;
  p.hidden = Activation::Tanh;
  p.output = OutputActivation::Tanh;  // both layers tanh
  p.layers.push_back({Tensor::zeros({1, 4}), Tensor::row({0.3, -0.2, 0.1, 0.7})});
  p.layers.push_back({Tensor::zeros({4, 1}), Tensor::row({0.25})});
  // hand evaluation: first layer tanh(b1) (unused), second layer tanh(b2)
  double expected = std::tanh(0.25);
  for (double z : {-5.0, 0.0, 1.0, 17.0}) {
    Tensor x({1, 1}, {z});
    CHECK(mlp_forward(p, x)[0] == doctest::Approx(expected).epsilon(1e-15));
  }
}

TEST_CASE("mlp forward rejects mismatched input naming the layer") {
  Rng rng(3);
  MlpParams p = MlpParams::init({2, 4, 1}, Activation::Tanh, OutputActivation::Identity, rng);
  Tensor bad({3, 3});
  CHECK_THROWS_WITH_AS(mlp_forward(p, bad), doctest::Contains("layer 0"), ShapeError);

  MlpParams broken = p;
  broken.layers[1].weight = Tensor::zeros({5, 1});  // breaks the chain
  Tensor ok({3, 2});
  CHECK_THROWS_WITH_AS(mlp_forward(broken, ok), doctest::Contains("layer 1"), ShapeError);
}

TEST_CASE("mlp tape forward matches plain forward and finite differences") {
  Rng rng(17);
  MlpParams model = MlpParams::init({2, 8, 3}, Activation::Tanh, OutputActivation::Sigmoid,
                                    rng);
  Tensor x({5, 2});
  for (double& v : x.data) v = rng.normal();

  Tape t;
  MlpOnTape net = mlp_forward(t, model, x);
  Tensor plain = mlp_forward(model, x);
  for (std::size_t i = 0; i < plain.size(); ++i)
    CHECK(t.value(net.out)[i] == doctest::Approx(plain[i]).epsilon(1e-15));

  // parameter gradients of a D2-style quadratic readout vs central differences
  Var loss = t.mean_all(t.square(net.out));
  t.backward(loss);
  std::vector<Tensor> autodiff = mlp_gradients(t, net);

  auto value = [&](const std::vector<Tensor>& params) {
    MlpParams m2 = model;
    std::size_t idx = 0;
    for (auto& layer : m2.layers) {
      layer.weight = params[idx++];
      layer.bias = params[idx++];
    }
    Tensor out = mlp_forward(m2, x);
    double acc = 0.0;
    for (double v : out.data) acc += v * v;
    return acc / static_cast<double>(out.size());
  };
  std::vector<Tensor> params;
  for (auto* p : model.parameters()) params.push_back(*p);
  std::vector<Tensor> fd = finite_difference_grads(value, params);
  CHECK(max_grad_rel_error(autodiff, fd) < 1e-4);
}

TEST_CASE("identical seeds give identical parameter trajectories") {
  auto short_run = [](std::uint64_t seed) {
    Rng rng(seed);
    MlpParams model = MlpParams::init({1, 8, 1}, Activation::Tanh, OutputActivation::Identity,
                                      rng);
    Adam opt(AdamConfig{1e-2, 0.9, 0.999, 1e-8});
    Rng data_rng = rng.fork(1);
    for (int epoch = 0; epoch < 20; ++epoch) {
      Tensor x({16, 1});
      for (double& v : x.data) v = data_rng.normal();
      Tape t;
      MlpOnTape net = mlp_forward(t, model, x);
      Var loss = t.mean_all(t.square(net.out));
      t.backward(loss);
      opt.step(model.parameters(), mlp_gradients(t, net));
    }
    return model;
  };
  MlpParams a = short_run(42), b = short_run(42), c = short_run(43);
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    CHECK(a.layers[l].weight.data == b.layers[l].weight.data);  // bitwise
    CHECK(a.layers[l].bias.data == b.layers[l].bias.data);
  }
  CHECK(a.layers[0].weight.data != c.layers[0].weight.data);
}

TEST_CASE("rng determinism and stream independence") {
  Rng a(7), b(7);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng base(7);
  Rng f1 = base.fork(1), f2 = base.fork(2);
  CHECK(f1.next_u64() != f2.next_u64());
}
