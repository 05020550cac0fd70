#include "vabal/tape.hpp"

#include <algorithm>
#include <cmath>

#include "vabal/error.hpp"
#include "vabal/kernels.hpp"
#include "vabal/numeric.hpp"

namespace vabal {

const char* op_name(Tape::Op op) {
  switch (op) {
    case Tape::Op::Leaf: return "leaf";
    case Tape::Op::Constant: return "constant";
    case Tape::Op::MatMul: return "matmul";
    case Tape::Op::Add: return "add";
    case Tape::Op::AddRow: return "add_row";
    case Tape::Op::Sub: return "sub";
    case Tape::Op::Mul: return "mul";
    case Tape::Op::Affine: return "affine";
    case Tape::Op::Relu: return "relu";
    case Tape::Op::Abs: return "abs";
    case Tape::Op::Sigmoid: return "sigmoid";
    case Tape::Op::Softmax: return "softmax";
    case Tape::Op::LogSoftmax: return "log_softmax";
    case Tape::Op::Square: return "square";
    case Tape::Op::Exp: return "exp";
    case Tape::Op::Log: return "log";
    case Tape::Op::Clamp: return "clamp";
    case Tape::Op::Sum: return "sum";
    case Tape::Op::BlockSum: return "block_sum";
    case Tape::Op::ConcatCols: return "concat_cols";
  }
  return "?";
}

Tape::Id Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size()) - 1;
}

const Tape::Node& Tape::node(Id id) const { return nodes_.at(static_cast<std::size_t>(id)); }

void Tape::check_valid(Id id, const char* op) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
    throw ContractError(std::string(op) + ": invalid node id " + std::to_string(id));
}

void Tape::check_result(const Node& n, const char* op) const {
  if (check_finite_ && !all_finite(n.val.data))
    throw NumericError(std::string("numeric overflow: non-finite value produced by ") + op);
}

const Tensor& Tape::value(Id id) const {
  check_valid(id, "value");
  return node(id).val;
}

Tape::Id Tape::leaf(Tensor& t) {
  Node n;
  n.op = Op::Leaf;
  n.val = t;  // copy of the current value; updates require a new tape
  n.leaf_target = &t;
  check_result(n, "leaf");
  return push(std::move(n));
}

Tape::Id Tape::constant(Tensor t) {
  Node n;
  n.op = Op::Constant;
  n.val = std::move(t);
  check_result(n, "constant");
  return push(std::move(n));
}

Tape::Id Tape::constant(std::vector<std::size_t> shape, std::vector<double> data) {
  return constant(Tensor(std::move(shape), std::move(data)));
}

Tape::Id Tape::matmul(Id a, Id b) {
  check_valid(a, "matmul");
  check_valid(b, "matmul");
  const Tensor& ta = node(a).val;
  const Tensor& tb = node(b).val;
  if (ta.shape.size() != 2 || tb.shape.size() != 2 || ta.shape[1] != tb.shape[0])
    throw ShapeError("matmul: incompatible shapes " + shape_str(ta.shape) + " x " +
                     shape_str(tb.shape));
  Node n;
  n.op = Op::MatMul;
  n.a = a;
  n.b = b;
  n.val = Tensor::zeros({ta.shape[0], tb.shape[1]});
  kern::matmul(ta.data.data(), tb.data.data(), n.val.data.data(),
               ta.shape[0], ta.shape[1], tb.shape[1]);
  check_result(n, "matmul");
  return push(std::move(n));
}

namespace {
void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape) + " vs " +
                     shape_str(b.shape));
}
}  // namespace

Tape::Id Tape::add(Id a, Id b) {
  check_valid(a, "add");
  check_valid(b, "add");
  const Tensor& ta = node(a).val;
  const Tensor& tb = node(b).val;
  require_same_shape(ta, tb, "add");
  Node n;
  n.op = Op::Add;
  n.a = a;
  n.b = b;
  n.val = ta;
  for (std::size_t i = 0; i < tb.size(); ++i) n.val.data[i] += tb.data[i];
  check_result(n, "add");
  return push(std::move(n));
}

Tape::Id Tape::add_row(Id matrix, Id row) {
  check_valid(matrix, "add_row");
  check_valid(row, "add_row");
  const Tensor& tm = node(matrix).val;
  const Tensor& tr = node(row).val;
  if (tm.cols() != tr.size() || tr.shape.size() != 1)
    throw ShapeError("add_row: cannot broadcast " + shape_str(tr.shape) + " over " +
                     shape_str(tm.shape));
  Node n;
  n.op = Op::AddRow;
  n.a = matrix;
  n.b = row;
  n.val = tm;
  kern::add_row_vector(tm.data.data(), tr.data.data(), n.val.data.data(), tm.rows(), tm.cols());
  check_result(n, "add_row");
  return push(std::move(n));
}

Tape::Id Tape::sub(Id a, Id b) {
  check_valid(a, "sub");
  check_valid(b, "sub");
  const Tensor& ta = node(a).val;
  const Tensor& tb = node(b).val;
  require_same_shape(ta, tb, "sub");
  Node n;
  n.op = Op::Sub;
  n.a = a;
  n.b = b;
  n.val = ta;
  for (std::size_t i = 0; i < tb.size(); ++i) n.val.data[i] -= tb.data[i];
  check_result(n, "sub");
  return push(std::move(n));
}

Tape::Id Tape::mul(Id a, Id b) {
  check_valid(a, "mul");
  check_valid(b, "mul");
  const Tensor& ta = node(a).val;
  const Tensor& tb = node(b).val;
  require_same_shape(ta, tb, "mul");
  Node n;
  n.op = Op::Mul;
  n.a = a;
  n.b = b;
  n.val = ta;
  for (std::size_t i = 0; i < tb.size(); ++i) n.val.data[i] *= tb.data[i];
  check_result(n, "mul");
  return push(std::move(n));
}

Tape::Id Tape::affine(Id a, double alpha, double beta) {
  check_valid(a, "affine");
  Node n;
  n.op = Op::Affine;
  n.a = a;
  n.p0 = alpha;
  n.p1 = beta;
  n.val = node(a).val;
  for (double& v : n.val.data) v = alpha * v + beta;
  check_result(n, "affine");
  return push(std::move(n));
}

Tape::Id Tape::relu(Id a) {
  check_valid(a, "relu");
  Node n;
  n.op = Op::Relu;
  n.a = a;
  n.val = node(a).val;
  for (double& v : n.val.data) v = v > 0.0 ? v : 0.0;
  check_result(n, "relu");
  return push(std::move(n));
}

Tape::Id Tape::abs(Id a) {
  check_valid(a, "abs");
  Node n;
  n.op = Op::Abs;
  n.a = a;
  n.val = node(a).val;
  for (double& v : n.val.data) v = std::fabs(v);
  check_result(n, "abs");
  return push(std::move(n));
}

Tape::Id Tape::sigmoid(Id a) {
  check_valid(a, "sigmoid");
  Node n;
  n.op = Op::Sigmoid;
  n.a = a;
  n.val = node(a).val;
  for (double& v : n.val.data) v = 1.0 / (1.0 + std::exp(-v));
  check_result(n, "sigmoid");
  return push(std::move(n));
}

Tape::Id Tape::softmax(Id a) {
  check_valid(a, "softmax");
  Node n;
  n.op = Op::Softmax;
  n.a = a;
  n.val = node(a).val;
  const std::size_t cols = n.val.cols();
  const std::size_t rows = n.val.size() / cols;
  for (std::size_t r = 0; r < rows; ++r) softmax_row(n.val.data.data() + r * cols, cols);
  check_result(n, "softmax");
  return push(std::move(n));
}

Tape::Id Tape::log_softmax(Id a) {
  check_valid(a, "log_softmax");
  Node n;
  n.op = Op::LogSoftmax;
  n.a = a;
  n.val = node(a).val;
  const std::size_t cols = n.val.cols();
  const std::size_t rows = n.val.size() / cols;
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = n.val.data.data() + r * cols;
    const double lse = logsumexp({row, cols});
    for (std::size_t j = 0; j < cols; ++j) row[j] -= lse;
  }
  check_result(n, "log_softmax");
  return push(std::move(n));
}

Tape::Id Tape::square(Id a) {
  check_valid(a, "square");
  Node n;
  n.op = Op::Square;
  n.a = a;
  n.val = node(a).val;
  for (double& v : n.val.data) v *= v;
  check_result(n, "square");
  return push(std::move(n));
}

Tape::Id Tape::exp(Id a) {
  check_valid(a, "exp");
  Node n;
  n.op = Op::Exp;
  n.a = a;
  n.val = node(a).val;
  for (double& v : n.val.data) v = std::exp(v);
  check_result(n, "exp");
  return push(std::move(n));
}

Tape::Id Tape::log(Id a) {
  check_valid(a, "log");
  Node n;
  n.op = Op::Log;
  n.a = a;
  n.val = node(a).val;
  for (double& v : n.val.data) v = std::log(v);
  check_result(n, "log");
  return push(std::move(n));
}

Tape::Id Tape::clamp(Id a, double lo, double hi) {
  check_valid(a, "clamp");
  if (!(lo <= hi)) throw ContractError("clamp: lo > hi");
  Node n;
  n.op = Op::Clamp;
  n.a = a;
  n.p0 = lo;
  n.p1 = hi;
  n.val = node(a).val;
  for (double& v : n.val.data) v = std::min(std::max(v, lo), hi);
  check_result(n, "clamp");
  return push(std::move(n));
}

Tape::Id Tape::sum(Id a) {
  check_valid(a, "sum");
  Node n;
  n.op = Op::Sum;
  n.a = a;
  double acc = 0.0;
  for (double v : node(a).val.data) acc += v;
  n.val = Tensor::scalar(acc);
  check_result(n, "sum");
  return push(std::move(n));
}

Tape::Id Tape::block_sum(Id a, std::size_t block_width) {
  check_valid(a, "block_sum");
  const Tensor& ta = node(a).val;
  const std::size_t cols = ta.cols();
  if (block_width == 0 || cols % block_width != 0)
    throw ShapeError("block_sum: width " + std::to_string(block_width) +
                     " does not divide last dim of " + shape_str(ta.shape));
  const std::size_t blocks = cols / block_width;
  const std::size_t rows = ta.size() / cols;
  Node n;
  n.op = Op::BlockSum;
  n.a = a;
  n.p0 = static_cast<double>(block_width);
  std::vector<std::size_t> out_shape = ta.shape;
  out_shape.back() = blocks;
  n.val = Tensor::zeros(out_shape);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t b = 0; b < blocks; ++b) {
      double acc = 0.0;
      const double* src = ta.data.data() + r * cols + b * block_width;
      for (std::size_t j = 0; j < block_width; ++j) acc += src[j];
      n.val.data[r * blocks + b] = acc;
    }
  check_result(n, "block_sum");
  return push(std::move(n));
}

Tape::Id Tape::concat_cols(Id a, Id b) {
  check_valid(a, "concat_cols");
  check_valid(b, "concat_cols");
  const Tensor& ta = node(a).val;
  const Tensor& tb = node(b).val;
  if (ta.shape.size() != 2 || tb.shape.size() != 2 || ta.shape[0] != tb.shape[0])
    throw ShapeError("concat_cols: incompatible shapes " + shape_str(ta.shape) + " ++ " +
                     shape_str(tb.shape));
  const std::size_t rows = ta.shape[0];
  const std::size_t ca = ta.shape[1];
  const std::size_t cb = tb.shape[1];
  Node n;
  n.op = Op::ConcatCols;
  n.a = a;
  n.b = b;
  n.val = Tensor::zeros({rows, ca + cb});
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(ta.data.data() + r * ca, ca, n.val.data.data() + r * (ca + cb));
    std::copy_n(tb.data.data() + r * cb, cb, n.val.data.data() + r * (ca + cb) + ca);
  }
  check_result(n, "concat_cols");
  return push(std::move(n));
}

void Tape::backward(Id output) {
  check_valid(output, "backward");
  if (node(output).val.size() != 1)
    throw ContractError("backward: output must be scalar, got shape " +
                        shape_str(node(output).val.shape));
  if (nodes_.empty()) throw ContractError("backward: empty tape");

  for (Node& n : nodes_) n.adj.assign(n.val.size(), 0.0);
  nodes_[static_cast<std::size_t>(output)].adj[0] = 1.0;

  for (Id id = output; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    const std::vector<double>& g = n.adj;
    bool all_zero = true;
    for (double v : g)
      if (v != 0.0) {
        all_zero = false;
        break;
      }
    if (all_zero) continue;

    switch (n.op) {
      case Op::Leaf:
        if (n.leaf_target && n.leaf_target->requires_grad) {
          if (n.leaf_target->grad.size() != n.leaf_target->data.size())
            n.leaf_target->grad.assign(n.leaf_target->data.size(), 0.0);
          for (std::size_t i = 0; i < g.size(); ++i) n.leaf_target->grad[i] += g[i];
        }
        break;
      case Op::Constant:
        break;
      case Op::MatMul: {
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        Node& nb = nodes_[static_cast<std::size_t>(n.b)];
        const std::size_t m = na.val.shape[0];
        const std::size_t k = na.val.shape[1];
        const std::size_t c = nb.val.shape[1];
        // dA += dC * B^T ; dB += A^T * dC
        kern::matmul_nt(g.data(), nb.val.data.data(), na.adj.data(), m, c, k, true);
        kern::matmul_tn(na.val.data.data(), g.data(), nb.adj.data(), m, k, c, true);
        break;
      }
      case Op::Add: {
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        Node& nb = nodes_[static_cast<std::size_t>(n.b)];
        for (std::size_t i = 0; i < g.size(); ++i) {
          na.adj[i] += g[i];
          nb.adj[i] += g[i];
        }
        break;
      }
      case Op::AddRow: {
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        Node& nb = nodes_[static_cast<std::size_t>(n.b)];
        const std::size_t cols = nb.val.size();
        const std::size_t rows = g.size() / cols;
        for (std::size_t i = 0; i < g.size(); ++i) na.adj[i] += g[i];
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t j = 0; j < cols; ++j) nb.adj[j] += g[r * cols + j];
        break;
      }
      case Op::Sub: {
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        Node& nb = nodes_[static_cast<std::size_t>(n.b)];
        for (std::size_t i = 0; i < g.size(); ++i) {
          na.adj[i] += g[i];
          nb.adj[i] -= g[i];
        }
        break;
      }
      case Op::Mul: {
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        Node& nb = nodes_[static_cast<std::size_t>(n.b)];
        for (std::size_t i = 0; i < g.size(); ++i) {
          na.adj[i] += g[i] * nb.val.data[i];
          nb.adj[i] += g[i] * na.val.data[i];
        }
        break;
      }
      case Op::Affine: {
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        for (std::size_t i = 0; i < g.size(); ++i) na.adj[i] += n.p0 * g[i];
        break;
      }
      case Op::Relu: {
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        for (std::size_t i = 0; i < g.size(); ++i)
          if (na.val.data[i] > 0.0) na.adj[i] += g[i];
        break;
      }
      case Op::Abs: {
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double x = na.val.data[i];
          if (x > 0.0)
            na.adj[i] += g[i];
          else if (x < 0.0)
            na.adj[i] -= g[i];
        }
        break;
      }
      case Op::Sigmoid: {
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double s = n.val.data[i];
          na.adj[i] += g[i] * s * (1.0 - s);
        }
        break;
      }
      case Op::Softmax: {
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        const std::size_t cols = n.val.cols();
        const std::size_t rows = n.val.size() / cols;
        for (std::size_t r = 0; r < rows; ++r) {
          const double* s = n.val.data.data() + r * cols;
          const double* gr = g.data() + r * cols;
          double dot = 0.0;
          for (std::size_t j = 0; j < cols; ++j) dot += gr[j] * s[j];
          for (std::size_t j = 0; j < cols; ++j)
            na.adj[r * cols + j] += s[j] * (gr[j] - dot);
        }
        break;
      }
      case Op::LogSoftmax: {
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        const std::size_t cols = n.val.cols();
        const std::size_t rows = n.val.size() / cols;
        for (std::size_t r = 0; r < rows; ++r) {
          const double* out = n.val.data.data() + r * cols;
          const double* gr = g.data() + r * cols;
          double gsum = 0.0;
          for (std::size_t j = 0; j < cols; ++j) gsum += gr[j];
          for (std::size_t j = 0; j < cols; ++j)
            na.adj[r * cols + j] += gr[j] - std::exp(out[j]) * gsum;
        }
        break;
      }
      case Op::Square: {
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        for (std::size_t i = 0; i < g.size(); ++i)
          na.adj[i] += g[i] * 2.0 * na.val.data[i];
        break;
      }
      case Op::Exp: {
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        for (std::size_t i = 0; i < g.size(); ++i) na.adj[i] += g[i] * n.val.data[i];
        break;
      }
      case Op::Log: {
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        for (std::size_t i = 0; i < g.size(); ++i) na.adj[i] += g[i] / na.val.data[i];
        break;
      }
      case Op::Clamp: {
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double x = na.val.data[i];
          if (x >= n.p0 && x <= n.p1) na.adj[i] += g[i];
        }
        break;
      }
      case Op::Sum: {
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        const double gv = g[0];
        for (double& v : na.adj) v += gv;
        break;
      }
      case Op::BlockSum: {
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        const std::size_t w = static_cast<std::size_t>(n.p0);
        const std::size_t blocks = n.val.cols();
        const std::size_t rows = n.val.size() / blocks;
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t b = 0; b < blocks; ++b) {
            const double gv = g[r * blocks + b];
            double* dst = na.adj.data() + r * blocks * w + b * w;
            for (std::size_t j = 0; j < w; ++j) dst[j] += gv;
          }
        break;
      }
      case Op::ConcatCols: {
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        Node& nb = nodes_[static_cast<std::size_t>(n.b)];
        const std::size_t rows = n.val.shape[0];
        const std::size_t ca = na.val.shape[1];
        const std::size_t cb = nb.val.shape[1];
        for (std::size_t r = 0; r < rows; ++r) {
          const double* gr = g.data() + r * (ca + cb);
          for (std::size_t j = 0; j < ca; ++j) na.adj[r * ca + j] += gr[j];
          for (std::size_t j = 0; j < cb; ++j) nb.adj[r * cb + j] += gr[ca + j];
        }
        break;
      }
    }
  }
}

}  // namespace vabal
