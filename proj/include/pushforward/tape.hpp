#pragma once

#include <functional>
#include <vector>

#include "pushforward/tensor.hpp"

namespace pf {

class Tape;

// Handle to a node on a tape. Cheap to copy; only valid for the tape that
// created it.
struct Var {
  int id = -1;
};

// Reverse-mode tape. Records primitive operations in topological (creation)
// order; backward() sweeps the records once in reverse. Rebuilt per loss
// evaluation; single-threaded per tape, though individual matmul/reduction
// kernels may fan out over OpenMP with fixed-order accumulation.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var input(Tensor value);

  const Tensor& value(Var v) const { return nodes_[check(v)].value; }
  const Tensor& adjoint(Var v) const { return nodes_[check(v)].adjoint; }
  std::size_t node_count() const { return nodes_.size(); }

  // ---- elementwise binary (same shape) ----
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);

  // ---- elementwise with constants ----
  Var scale(Var a, double c);               // c * a
  Var add_const(Var a, double c);           // a + c
  Var affine(Var a, double m, double c);    // m * a + c

  // ---- broadcasts ----
  Var add_rowvec(Var m, Var r);     // [n,k] + [1,k]
  Var mul_rowvec(Var m, Var r);     // [n,k] * [1,k]
  Var add_scalarvar(Var m, Var s);  // [n,k] + [1,1]
  Var mul_scalarvar(Var m, Var s);  // [n,k] * [1,1]

  // ---- matrix product [n,k] x [k,m] ----
  Var matmul(Var a, Var b);

  // ---- elementwise unary ----
  Var neg(Var a) { return scale(a, -1.0); }
  Var tanh(Var a);
  Var relu(Var a);
  Var sigmoid(Var a);
  Var softplus(Var a);
  Var exp(Var a);
  Var log(Var a);
  Var sin(Var a);
  Var cos(Var a);
  Var sqrt(Var a);
  Var square(Var a);

  // ---- reductions ----
  Var sum_all(Var a);   // -> [1,1]
  Var mean_all(Var a);  // -> [1,1]
  Var row_sums(Var a);  // [n,m] -> [n,1]

  // Custom node with caller-supplied backward. `backward(out_adjoint, tape)`
  // must accumulate (+=) into the parents' adjoints via adjoint_mut().
  using BackwardFn = std::function<void(const Tensor& out_adjoint, Tape& tape)>;
  Var custom(Tensor value, std::vector<Var> parents, BackwardFn backward);

  Tensor& adjoint_mut(Var v) { return nodes_[check(v)].adjoint; }

  // Seeds the scalar loss with adjoint 1 and runs one reverse sweep.
  // Throws ContractError if `loss` is not a scalar node.
  void backward(Var loss);

  // Convenience: adjoint of `param` after backward(loss).
  const Tensor& grad(Var param) const { return adjoint(param); }

 private:
  struct Node {
    Tensor value;
    Tensor adjoint;  // allocated lazily by backward()
    std::vector<int> parents;
    BackwardFn backprop;  // empty for leaves
  };

  int check(Var v) const;
  Var push(Tensor value, std::vector<int> parents, BackwardFn fn);
  Var unary(Var a, Tensor value, std::function<void(const Tensor&, Tensor&)> accumulate);

  std::vector<Node> nodes_;
};

}  // namespace pf
