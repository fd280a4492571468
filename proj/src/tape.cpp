#include "pushforward/tape.hpp"

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

namespace pf {

int Tape::check(Var v) const {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size())
    throw ContractError("Tape: variable does not belong to this tape");
  return v.id;
}

Var Tape::push(Tensor value, std::vector<int> parents, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  n.parents = std::move(parents);
  n.backprop = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::input(Tensor value) { return push(std::move(value), {}, nullptr); }

Var Tape::add(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  require_same_shape(av, bv, "add");
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  int ai = a.id, bi = b.id;
  return push(std::move(out), {ai, bi}, [ai, bi](const Tensor& g, Tape& t) {
    Tensor& da = t.nodes_[ai].adjoint;
    Tensor& db = t.nodes_[bi].adjoint;
    for (std::size_t i = 0; i < g.size(); ++i) {
      da[i] += g[i];
      db[i] += g[i];
    }
  });
}

Var Tape::sub(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  require_same_shape(av, bv, "sub");
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  int ai = a.id, bi = b.id;
  return push(std::move(out), {ai, bi}, [ai, bi](const Tensor& g, Tape& t) {
    Tensor& da = t.nodes_[ai].adjoint;
    Tensor& db = t.nodes_[bi].adjoint;
    for (std::size_t i = 0; i < g.size(); ++i) {
      da[i] += g[i];
      db[i] -= g[i];
    }
  });
}

Var Tape::mul(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  require_same_shape(av, bv, "mul");
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  int ai = a.id, bi = b.id;
  return push(std::move(out), {ai, bi}, [ai, bi](const Tensor& g, Tape& t) {
    const Tensor& av2 = t.nodes_[ai].value;
    const Tensor& bv2 = t.nodes_[bi].value;
    Tensor& da = t.nodes_[ai].adjoint;
    Tensor& db = t.nodes_[bi].adjoint;
    for (std::size_t i = 0; i < g.size(); ++i) {
      da[i] += g[i] * bv2[i];
      db[i] += g[i] * av2[i];
    }
  });
}

Var Tape::scale(Var a, double c) { return affine(a, c, 0.0); }
Var Tape::add_const(Var a, double c) { return affine(a, 1.0, c); }

Var Tape::affine(Var a, double m, double c) {
  Tensor out = value(a);
  for (double& v : out.data) v = m * v + c;
  int ai = a.id;
  return push(std::move(out), {ai}, [ai, m](const Tensor& g, Tape& t) {
    Tensor& da = t.nodes_[ai].adjoint;
    for (std::size_t i = 0; i < g.size(); ++i) da[i] += m * g[i];
  });
}

Var Tape::add_rowvec(Var m, Var r) {
  const Tensor& mv = value(m);
  const Tensor& rv = value(r);
  if (rv.rows() != 1 || rv.cols() != mv.cols())
    throw ShapeError("add_rowvec: row vector must be [1," + std::to_string(mv.cols()) + "]");
  Tensor out = mv;
  std::size_t n = mv.rows(), k = mv.cols();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) out(i, j) += rv[j];
  int mi = m.id, ri = r.id;
  return push(std::move(out), {mi, ri}, [mi, ri](const Tensor& g, Tape& t) {
    Tensor& dm = t.nodes_[mi].adjoint;
    Tensor& dr = t.nodes_[ri].adjoint;
    std::size_t n = g.rows(), k = g.cols();
    for (std::size_t i = 0; i < g.size(); ++i) dm[i] += g[i];
    for (std::size_t j = 0; j < k; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += g(i, j);
      dr[j] += s;
    }
  });
}

Var Tape::mul_rowvec(Var m, Var r) {
  const Tensor& mv = value(m);
  const Tensor& rv = value(r);
  if (rv.rows() != 1 || rv.cols() != mv.cols())
    throw ShapeError("mul_rowvec: row vector must be [1," + std::to_string(mv.cols()) + "]");
  Tensor out = mv;
  std::size_t n = mv.rows(), k = mv.cols();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) out(i, j) *= rv[j];
  int mi = m.id, ri = r.id;
  return push(std::move(out), {mi, ri}, [mi, ri](const Tensor& g, Tape& t) {
    const Tensor& mv2 = t.nodes_[mi].value;
    const Tensor& rv2 = t.nodes_[ri].value;
    Tensor& dm = t.nodes_[mi].adjoint;
    Tensor& dr = t.nodes_[ri].adjoint;
    std::size_t n = g.rows(), k = g.cols();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < k; ++j) dm(i, j) += g(i, j) * rv2[j];
    for (std::size_t j = 0; j < k; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += g(i, j) * mv2(i, j);
      dr[j] += s;
    }
  });
}

Var Tape::add_scalarvar(Var m, Var s) {
  const Tensor& mv = value(m);
  const Tensor& sv = value(s);
  if (!sv.is_scalar()) throw ShapeError("add_scalarvar: second operand must be scalar");
  Tensor out = mv;
  for (double& v : out.data) v += sv[0];
  int mi = m.id, si = s.id;
  return push(std::move(out), {mi, si}, [mi, si](const Tensor& g, Tape& t) {
    Tensor& dm = t.nodes_[mi].adjoint;
    Tensor& ds = t.nodes_[si].adjoint;
    double acc = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      dm[i] += g[i];
      acc += g[i];
    }
    ds[0] += acc;
  });
}

Var Tape::mul_scalarvar(Var m, Var s) {
  const Tensor& mv = value(m);
  const Tensor& sv = value(s);
  if (!sv.is_scalar()) throw ShapeError("mul_scalarvar: second operand must be scalar");
  Tensor out = mv;
  for (double& v : out.data) v *= sv[0];
  int mi = m.id, si = s.id;
  return push(std::move(out), {mi, si}, [mi, si](const Tensor& g, Tape& t) {
    const Tensor& mv2 = t.nodes_[mi].value;
    double sval = t.nodes_[si].value[0];
    Tensor& dm = t.nodes_[mi].adjoint;
    Tensor& ds = t.nodes_[si].adjoint;
    double acc = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      dm[i] += g[i] * sval;
      acc += g[i] * mv2[i];
    }
    ds[0] += acc;
  });
}

namespace {

// out[n,m] = a[n,k] * b[k,m]; deterministic: each output element is a
// fixed-order dot product regardless of thread count.
void matmul_kernel(const Tensor& a, const Tensor& b, Tensor& out) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
#pragma omp parallel for if (n * m * k > 16384)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a(i, p) * b(p, j);
      out(i, j) = s;
    }
  }
}

// da[n,k] += g[n,m] * b[k,m]^T
void matmul_grad_a(const Tensor& g, const Tensor& b, Tensor& da) {
  const std::size_t n = g.rows(), m = g.cols(), k = b.rows();
#pragma omp parallel for if (n * m * k > 16384)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += g(i, j) * b(p, j);
      da(i, p) += s;
    }
  }
}

// db[k,m] += a[n,k]^T * g[n,m]
void matmul_grad_b(const Tensor& g, const Tensor& a, Tensor& db) {
  const std::size_t n = g.rows(), m = g.cols(), k = a.cols();
#pragma omp parallel for if (n * m * k > 16384)
  for (std::ptrdiff_t p = 0; p < static_cast<std::ptrdiff_t>(k); ++p) {
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += a(i, p) * g(i, j);
      db(p, j) += s;
    }
  }
}

}  // namespace

Var Tape::matmul(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows())
    throw ShapeError("matmul: [" + std::to_string(av.rows()) + "," + std::to_string(av.cols()) +
                     "] x [" + std::to_string(bv.rows()) + "," + std::to_string(bv.cols()) + "]");
  Tensor out({av.rows(), bv.cols()});
  matmul_kernel(av, bv, out);
  int ai = a.id, bi = b.id;
  return push(std::move(out), {ai, bi}, [ai, bi](const Tensor& g, Tape& t) {
    matmul_grad_a(g, t.nodes_[bi].value, t.nodes_[ai].adjoint);
    matmul_grad_b(g, t.nodes_[ai].value, t.nodes_[bi].adjoint);
  });
}

Var Tape::unary(Var a, Tensor out, std::function<void(const Tensor&, Tensor&)> accumulate) {
  int ai = a.id;
  return push(std::move(out), {ai},
              [ai, acc = std::move(accumulate)](const Tensor& g, Tape& t) {
                acc(g, t.nodes_[ai].adjoint);
              });
}

Var Tape::tanh(Var a) {
  Tensor out = value(a);
  for (double& v : out.data) v = std::tanh(v);
  Tensor y = out;
  return unary(a, std::move(out), [y = std::move(y)](const Tensor& g, Tensor& da) {
    for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var Tape::relu(Var a) {
  const Tensor& av = value(a);
  Tensor out = av;
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  Tensor x = av;
  return unary(a, std::move(out), [x = std::move(x)](const Tensor& g, Tensor& da) {
    for (std::size_t i = 0; i < g.size(); ++i) da[i] += x[i] > 0.0 ? g[i] : 0.0;
  });
}

Var Tape::sigmoid(Var a) {
  Tensor out = value(a);
  for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
  Tensor y = out;
  return unary(a, std::move(out), [y = std::move(y)](const Tensor& g, Tensor& da) {
    for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var Tape::softplus(Var a) {
  const Tensor& av = value(a);
  Tensor out = av;
  for (double& v : out.data) v = v > 30.0 ? v : std::log1p(std::exp(v));
  Tensor x = av;
  return unary(a, std::move(out), [x = std::move(x)](const Tensor& g, Tensor& da) {
    for (std::size_t i = 0; i < g.size(); ++i)
      da[i] += g[i] / (1.0 + std::exp(-x[i]));
  });
}

Var Tape::exp(Var a) {
  Tensor out = value(a);
  for (double& v : out.data) v = std::exp(v);
  Tensor y = out;
  return unary(a, std::move(out), [y = std::move(y)](const Tensor& g, Tensor& da) {
    for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * y[i];
  });
}

Var Tape::log(Var a) {
  const Tensor& av = value(a);
  Tensor out = av;
  for (double& v : out.data) v = std::log(v);
  Tensor x = av;
  return unary(a, std::move(out), [x = std::move(x)](const Tensor& g, Tensor& da) {
    for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] / x[i];
  });
}

Var Tape::sin(Var a) {
  const Tensor& av = value(a);
  Tensor out = av;
  for (double& v : out.data) v = std::sin(v);
  Tensor x = av;
  return unary(a, std::move(out), [x = std::move(x)](const Tensor& g, Tensor& da) {
    for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * std::cos(x[i]);
  });
}

Var Tape::cos(Var a) {
  const Tensor& av = value(a);
  Tensor out = av;
  for (double& v : out.data) v = std::cos(v);
  Tensor x = av;
  return unary(a, std::move(out), [x = std::move(x)](const Tensor& g, Tensor& da) {
    for (std::size_t i = 0; i < g.size(); ++i) da[i] -= g[i] * std::sin(x[i]);
  });
}

Var Tape::sqrt(Var a) {
  Tensor out = value(a);
  for (double& v : out.data) v = std::sqrt(v);
  Tensor y = out;
  return unary(a, std::move(out), [y = std::move(y)](const Tensor& g, Tensor& da) {
    for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] / (2.0 * y[i]);
  });
}

Var Tape::square(Var a) {
  const Tensor& av = value(a);
  Tensor out = av;
  for (double& v : out.data) v = v * v;
  Tensor x = av;
  return unary(a, std::move(out), [x = std::move(x)](const Tensor& g, Tensor& da) {
    for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * 2.0 * x[i];
  });
}

Var Tape::sum_all(Var a) {
  const Tensor& av = value(a);
  double s = 0.0;
  for (double v : av.data) s += v;
  return unary(a, Tensor::scalar(s), [](const Tensor& g, Tensor& da) {
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += g[0];
  });
}

Var Tape::mean_all(Var a) {
  const Tensor& av = value(a);
  double s = 0.0;
  for (double v : av.data) s += v;
  const double inv = 1.0 / static_cast<double>(av.size());
  return unary(a, Tensor::scalar(s * inv), [inv](const Tensor& g, Tensor& da) {
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += g[0] * inv;
  });
}

Var Tape::row_sums(Var a) {
  const Tensor& av = value(a);
  std::size_t n = av.rows(), m = av.cols();
  Tensor out({n, 1});
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += av(i, j);
    out[i] = s;
  }
  return unary(a, std::move(out), [m](const Tensor& g, Tensor& da) {
    std::size_t n = g.rows();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) da[i * m + j] += g[i];
  });
}

Var Tape::custom(Tensor value, std::vector<Var> parents, BackwardFn backward) {
  std::vector<int> ids;
  ids.reserve(parents.size());
  for (Var p : parents) ids.push_back(check(p));
  return push(std::move(value), std::move(ids), std::move(backward));
}

void Tape::backward(Var loss) {
  int li = check(loss);
  if (!nodes_[li].value.is_scalar())
    throw ContractError("backward: loss must be a scalar node (size 1), got size " +
                        std::to_string(nodes_[li].value.size()));
  for (Node& n : nodes_) {
    n.adjoint = Tensor(n.value.shape);  // zeros
  }
  nodes_[li].adjoint[0] = 1.0;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backprop) n.backprop(n.adjoint, *this);
  }
}

}  // namespace pf
