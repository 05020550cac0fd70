#pragma once

#include <cstdint>
#include <vector>

#include "vabal/tensor.hpp"

namespace vabal {

/// Reverse-mode automatic differentiation over dense tensors.
///
/// A Tape records one forward computation as an append-only list of primitive
/// nodes; node ids are indices into that list, so topological order is the
/// recording order. backward() runs one reverse sweep and accumulates
/// gradients of Leaf nodes into the external tensors they were created from.
/// Tapes are single-threaded; build a fresh tape per training step.
class Tape {
 public:
  using Id = int;

  enum class Op : std::uint8_t {
    Leaf,        // external parameter or input; grads flow to Tensor::grad
    Constant,    // value owned by the tape, no gradient
    MatMul,      // [m,k] x [k,n] -> [m,n]
    Add,         // elementwise, same shape
    AddRow,      // [r,c] + [c] broadcast over rows
    Sub,         // elementwise
    Mul,         // elementwise (Hadamard)
    Affine,      // alpha * x + beta, elementwise
    Relu,        // subgradient at 0 is 0
    Abs,         // subgradient at 0 is 0
    Sigmoid,
    Softmax,     // stable, over the last dimension of each row
    LogSoftmax,  // over the last dimension of each row
    Square,
    Exp,
    Log,
    Clamp,       // clamp to [lo, hi]; pass-through gradient inside
    Sum,         // all elements -> scalar [1]
    BlockSum,    // [.., w*b] -> [.., b], sums fixed-width blocks of the last dim
    ConcatCols,  // [r,c1] ++ [r,c2] -> [r,c1+c2]
  };

  /// Register an external tensor. Gradients accumulate into t.grad when
  /// t.requires_grad; the tensor must outlive the tape.
  Id leaf(Tensor& t);

  /// A value owned by the tape; never receives gradient.
  Id constant(Tensor t);
  Id constant(std::vector<std::size_t> shape, std::vector<double> data);

  Id matmul(Id a, Id b);
  Id add(Id a, Id b);
  Id add_row(Id matrix, Id row);
  Id sub(Id a, Id b);
  Id mul(Id a, Id b);
  Id affine(Id a, double alpha, double beta);
  Id relu(Id a);
  Id abs(Id a);
  Id sigmoid(Id a);
  Id softmax(Id a);
  Id log_softmax(Id a);
  Id square(Id a);
  Id exp(Id a);
  Id log(Id a);
  Id clamp(Id a, double lo, double hi);
  Id sum(Id a);
  Id block_sum(Id a, std::size_t block_width);
  Id concat_cols(Id a, Id b);

  const Tensor& value(Id id) const;
  std::size_t num_nodes() const { return nodes_.size(); }

  /// Reverse sweep from a scalar output. Visits each node once; leaf
  /// adjoints are added into their tensors' grad buffers.
  void backward(Id output);

  /// NaN/Inf detection after every forward primitive (on by default).
  void set_check_finite(bool on) { check_finite_ = on; }

 private:
  struct Node {
    Op op;
    Id a = -1;
    Id b = -1;
    double p0 = 0.0;  // Affine alpha / Clamp lo / BlockSum width
    double p1 = 0.0;  // Affine beta / Clamp hi
    Tensor val;
    std::vector<double> adj;
    Tensor* leaf_target = nullptr;
  };

  Id push(Node n);
  const Node& node(Id id) const;
  void check_valid(Id id, const char* op_name) const;
  void check_result(const Node& n, const char* op_name) const;

  std::vector<Node> nodes_;
  bool check_finite_ = true;
};

const char* op_name(Tape::Op op);

}  // namespace vabal
