#pragma once

// Reverse-mode differentiation over row-batched matrices.
//
// A Graph is a recorded list of operations. Building the graph only records
// structure; forward() evaluates every node in insertion order (which is a
// topological order by construction) and backward() propagates the gradient
// of a scalar root into the ParamSet the graph was built against. Rows of a
// value are batch items, columns are features.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ictsurf/errors.hpp"

namespace ictsurf::ad {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
};

/// Named learnable tensors. Gradient buffers always have the shape of their
/// values; names are unique.
class ParamSet {
 public:
  Parameter& add(std::string name, Matrix value) {
    if (contains(name)) throw InputError("duplicate parameter name '" + name + "'");
    Matrix grad = Matrix::Zero(value.rows(), value.cols());
    items_.push_back(Parameter{std::move(name), std::move(value), std::move(grad)});
    return items_.back();
  }

  bool contains(std::string_view name) const {
    return std::any_of(items_.begin(), items_.end(),
                       [&](const Parameter& p) { return p.name == name; });
  }

  std::size_t index_of(std::string_view name) const {
    for (std::size_t i = 0; i < items_.size(); ++i) {
      if (items_[i].name == name) return i;
    }
    throw InputError("unknown parameter '" + std::string(name) + "'");
  }

  Parameter& at(std::string_view name) { return items_[index_of(name)]; }
  const Parameter& at(std::string_view name) const { return items_[index_of(name)]; }
  Parameter& operator[](std::size_t i) { return items_[i]; }
  const Parameter& operator[](std::size_t i) const { return items_[i]; }

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  void zero_grad() {
    for (auto& p : items_) p.grad.setZero(p.value.rows(), p.value.cols());
  }

  /// Total number of scalar entries.
  Index scalar_count() const {
    Index total = 0;
    for (const auto& p : items_) total += p.value.size();
    return total;
  }

 private:
  std::vector<Parameter> items_;
};

enum class OpKind {
  input,
  constant,
  parameter,
  matmul,
  add,
  add_row,
  mul,
  scale,
  concat,
  slice_cols,
  relu,
  sine,
  log,
  softplus,
  batch_norm,
  sum,
  mean,
  negate,
};

inline const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::input: return "input";
    case OpKind::constant: return "constant";
    case OpKind::parameter: return "parameter";
    case OpKind::matmul: return "matmul";
    case OpKind::add: return "add";
    case OpKind::add_row: return "add_row";
    case OpKind::mul: return "mul";
    case OpKind::scale: return "scale";
    case OpKind::concat: return "concat";
    case OpKind::slice_cols: return "slice_cols";
    case OpKind::relu: return "relu";
    case OpKind::sine: return "sine";
    case OpKind::log: return "log";
    case OpKind::softplus: return "softplus";
    case OpKind::batch_norm: return "batch_norm";
    case OpKind::sum: return "sum";
    case OpKind::mean: return "mean";
    case OpKind::negate: return "negate";
  }
  return "?";
}

/// Handle to a node of a Graph.
struct Var {
  std::size_t id = 0;
};

enum class BatchNormMode { training, inference };

inline constexpr double kBatchNormEpsilon = 1e-5;

/// Stable log(1 + exp(x)).
inline double softplus(double x) {
  // floored so that inputs below about -745 still give a positive value
  return std::max(std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))),
                  std::numeric_limits<double>::denorm_min());
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

using InputMap = std::map<std::string, Matrix, std::less<>>;

class Graph {
 public:
  explicit Graph(ParamSet& params) : params_(&params), mutable_params_(&params) {}
  /// Read-only graph: forward only, backward() is rejected.
  explicit Graph(const ParamSet& params) : params_(&params) {}

  Var input(std::string name) {
    Node node = make(OpKind::input, {});
    node.name = std::move(name);
    return push(std::move(node));
  }

  Var constant(Matrix value) {
    Node node = make(OpKind::constant, {});
    node.value = std::move(value);
    return push(std::move(node));
  }

  Var parameter(std::string_view name) {
    Node node = make(OpKind::parameter, {});
    node.param = params_->index_of(name);
    node.name = std::string(name);
    node.requires_grad = true;
    return push(std::move(node));
  }

  /// Matrix product a (n x k) * b (k x m).
  Var matmul(Var a, Var b) { return push(make(OpKind::matmul, {a, b})); }
  /// Elementwise sum of equally shaped operands.
  Var add(Var a, Var b) { return push(make(OpKind::add, {a, b})); }
  /// Adds a 1 x m row to every row of a (n x m).
  Var add_row(Var a, Var row) { return push(make(OpKind::add_row, {a, row})); }
  Var mul(Var a, Var b) { return push(make(OpKind::mul, {a, b})); }
  Var scale(Var a, double factor) {
    Node node = make(OpKind::scale, {a});
    node.factor = factor;
    return push(std::move(node));
  }
  /// Column-wise concatenation; all operands share the row count.
  Var concat(std::span<const Var> parts) {
    return push(make(OpKind::concat, std::vector<Var>(parts.begin(), parts.end())));
  }
  Var concat(std::initializer_list<Var> parts) {
    return concat(std::span<const Var>(parts.begin(), parts.size()));
  }
  Var slice_cols(Var a, Index begin, Index count) {
    Node node = make(OpKind::slice_cols, {a});
    node.begin = begin;
    node.count = count;
    return push(std::move(node));
  }
  Var relu(Var a) { return push(make(OpKind::relu, {a})); }
  Var sine(Var a) { return push(make(OpKind::sine, {a})); }
  Var log(Var a) { return push(make(OpKind::log, {a})); }
  Var softplus(Var a) { return push(make(OpKind::softplus, {a})); }
  Var sum(Var a) { return push(make(OpKind::sum, {a})); }
  Var mean(Var a) { return push(make(OpKind::mean, {a})); }
  Var negate(Var a) { return push(make(OpKind::negate, {a})); }

  /// Per-column normalization of x followed by the affine map gamma * xhat +
  /// beta (gamma and beta are 1 x F). Training mode normalizes with the
  /// batch statistics; inference mode with the supplied running statistics.
  Var batch_norm(Var x, Var gamma, Var beta, BatchNormMode mode, Matrix running_mean = {},
                 Matrix running_var = {}) {
    Node node = make(OpKind::batch_norm, {x, gamma, beta});
    node.training = mode == BatchNormMode::training;
    if (!node.training) {
      if (running_mean.rows() != 1 || running_var.rows() != 1 ||
          running_mean.cols() != running_var.cols()) {
        throw DimensionError("batch_norm: running statistics must be 1 x F rows of equal width");
      }
      node.running_mean = std::move(running_mean);
      node.running_var = std::move(running_var);
    }
    return push(std::move(node));
  }

  std::size_t size() const { return nodes_.size(); }
  Var root() const {
    if (nodes_.empty()) throw StateError("graph is empty");
    return Var{nodes_.size() - 1};
  }
  OpKind kind(Var v) const { return node(v).kind; }
  bool evaluated() const { return evaluated_; }

  /// Evaluates every node and returns the value of the last one.
  const Matrix& forward(const InputMap& inputs = {}) {
    evaluated_ = false;
    backward_done_ = false;
    for (std::size_t i = 0; i < nodes_.size(); ++i) evaluate(i, inputs);
    evaluated_ = true;
    return nodes_.back().value;
  }

  const Matrix& value(Var v) const {
    require_forward("value");
    return node(v).value;
  }

  /// Gradient of the last backward root with respect to v. Empty for nodes
  /// that do not lead to a parameter.
  const Matrix& gradient(Var v) const {
    if (!backward_done_) throw StateError("gradient requested before backward");
    return node(v).grad;
  }

  /// Batch mean and unbiased batch variance seen by a training-mode
  /// batch-norm node during the last forward pass.
  const Matrix& batch_mean(Var v) const {
    require_batch_norm_stats(v);
    return node(v).batch_mean;
  }
  const Matrix& batch_var(Var v) const {
    require_batch_norm_stats(v);
    return node(v).batch_var_unbiased;
  }

  /// Accumulates d(root)/d(parameter) into the ParamSet gradient buffers.
  void backward(Var root) {
    require_forward("backward");
    if (mutable_params_ == nullptr) throw StateError("backward on a read-only graph");
    Node& r = node(root);
    if (r.value.rows() != 1 || r.value.cols() != 1) {
      throw DimensionError("backward: root node #" + std::to_string(root.id) + " (" +
                           op_name(r.kind) + ") is not scalar");
    }
    for (auto& n : nodes_) n.grad.resize(0, 0);
    r.grad = Matrix::Ones(1, 1);
    for (std::size_t i = root.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.grad.size() == 0 || !n.requires_grad) continue;
      propagate(i);
    }
    backward_done_ = true;
  }

  void backward() { backward(root()); }

  /// Signs of every ReLU input from the last forward pass, in node order.
  std::vector<bool> relu_pattern() const {
    require_forward("relu_pattern");
    std::vector<bool> out;
    for (const auto& n : nodes_) {
      if (n.kind != OpKind::relu) continue;
      const Matrix& x = nodes_[n.operands[0].id].value;
      for (Index k = 0; k < x.size(); ++k) out.push_back(x.data()[k] > 0.0);
    }
    return out;
  }

  /// Indices (into the ParamSet) of the parameters this graph reads.
  std::vector<std::size_t> parameter_indices() const {
    std::vector<std::size_t> out;
    for (const auto& n : nodes_) {
      if (n.kind == OpKind::parameter &&
          std::find(out.begin(), out.end(), n.param) == out.end()) {
        out.push_back(n.param);
      }
    }
    return out;
  }

  ParamSet& params() {
    if (mutable_params_ == nullptr) throw StateError("graph was built over read-only parameters");
    return *mutable_params_;
  }
  const ParamSet& params() const { return *params_; }

 private:
  struct Node {
    OpKind kind = OpKind::constant;
    std::vector<Var> operands;
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    std::string name;
    std::size_t param = 0;
    double factor = 1.0;
    Index begin = 0;
    Index count = 0;
    // batch-norm state
    bool training = true;
    Matrix running_mean;
    Matrix running_var;
    Matrix normalized;
    Matrix inv_std;
    Matrix batch_mean;
    Matrix batch_var_unbiased;
  };

  Node make(OpKind kind, std::vector<Var> operands) const {
    Node n;
    n.kind = kind;
    for (Var v : operands) {
      if (v.id >= nodes_.size()) throw StateError("operand refers to a node outside this graph");
      n.requires_grad = n.requires_grad || nodes_[v.id].requires_grad;
    }
    n.operands = std::move(operands);
    return n;
  }

  Var push(Node n) {
    nodes_.push_back(std::move(n));
    evaluated_ = false;
    return Var{nodes_.size() - 1};
  }

  Node& node(Var v) {
    if (v.id >= nodes_.size()) throw StateError("node id out of range");
    return nodes_[v.id];
  }
  const Node& node(Var v) const {
    if (v.id >= nodes_.size()) throw StateError("node id out of range");
    return nodes_[v.id];
  }

  void require_forward(const char* what) const {
    if (!evaluated_) throw StateError(std::string(what) + " called before forward");
  }

  void require_batch_norm_stats(Var v) const {
    require_forward("batch statistics");
    const Node& n = node(v);
    if (n.kind != OpKind::batch_norm || !n.training) {
      throw StateError("node #" + std::to_string(v.id) + " is not a training-mode batch_norm");
    }
  }

  [[noreturn]] void shape_error(std::size_t id, const std::string& detail) const {
    throw DimensionError("node #" + std::to_string(id) + " (" + op_name(nodes_[id].kind) +
                         "): " + detail);
  }

  static std::string shape(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
  }

  const Matrix& operand(const Node& n, std::size_t k) const { return nodes_[n.operands[k].id].value; }

  void evaluate(std::size_t id, const InputMap& inputs) {
    Node& n = nodes_[id];
    switch (n.kind) {
      case OpKind::input: {
        auto it = inputs.find(n.name);
        if (it == inputs.end()) throw StateError("input '" + n.name + "' is not bound");
        n.value = it->second;
        break;
      }
      case OpKind::constant:
        break;
      case OpKind::parameter:
        n.value = (*params_)[n.param].value;
        break;
      case OpKind::matmul: {
        const Matrix& a = operand(n, 0);
        const Matrix& b = operand(n, 1);
        if (a.cols() != b.rows()) shape_error(id, shape(a) + " times " + shape(b));
        n.value.noalias() = a * b;
        break;
      }
      case OpKind::add:
      case OpKind::mul: {
        const Matrix& a = operand(n, 0);
        const Matrix& b = operand(n, 1);
        if (a.rows() != b.rows() || a.cols() != b.cols()) {
          shape_error(id, shape(a) + " vs " + shape(b));
        }
        if (n.kind == OpKind::add) {
          n.value = a + b;
        } else {
          n.value = a.cwiseProduct(b);
        }
        break;
      }
      case OpKind::add_row: {
        const Matrix& a = operand(n, 0);
        const Matrix& row = operand(n, 1);
        if (row.rows() != 1 || row.cols() != a.cols()) {
          shape_error(id, "row " + shape(row) + " does not broadcast over " + shape(a));
        }
        n.value = a.rowwise() + row.row(0);
        break;
      }
      case OpKind::scale:
        n.value = operand(n, 0) * n.factor;
        break;
      case OpKind::concat: {
        if (n.operands.empty()) shape_error(id, "no operands");
        const Index rows = operand(n, 0).rows();
        Index cols = 0;
        for (std::size_t k = 0; k < n.operands.size(); ++k) {
          const Matrix& part = operand(n, k);
          if (part.rows() != rows) {
            shape_error(id, "operand " + std::to_string(k) + " has " + shape(part) + ", expected " +
                                std::to_string(rows) + " rows");
          }
          cols += part.cols();
        }
        n.value.resize(rows, cols);
        Index offset = 0;
        for (std::size_t k = 0; k < n.operands.size(); ++k) {
          const Matrix& part = operand(n, k);
          n.value.middleCols(offset, part.cols()) = part;
          offset += part.cols();
        }
        break;
      }
      case OpKind::slice_cols: {
        const Matrix& a = operand(n, 0);
        if (n.begin < 0 || n.count < 0 || n.begin + n.count > a.cols()) {
          shape_error(id, "columns [" + std::to_string(n.begin) + ", " +
                              std::to_string(n.begin + n.count) + ") of " + shape(a));
        }
        n.value = a.middleCols(n.begin, n.count);
        break;
      }
      case OpKind::relu:
        n.value = operand(n, 0).cwiseMax(0.0);
        break;
      case OpKind::sine:
        n.value = operand(n, 0).array().sin().matrix();
        break;
      case OpKind::log: {
        const Matrix& a = operand(n, 0);
        for (Index k = 0; k < a.size(); ++k) {
          if (!(a.data()[k] > 0.0)) {
            throw DomainError("node #" + std::to_string(id) + " (log): non-positive argument " +
                              std::to_string(a.data()[k]));
          }
        }
        n.value = a.array().log().matrix();
        break;
      }
      case OpKind::softplus:
        n.value = operand(n, 0).unaryExpr([](double x) { return ad::softplus(x); });
        break;
      case OpKind::batch_norm:
        evaluate_batch_norm(id);
        break;
      case OpKind::sum:
        n.value = Matrix::Constant(1, 1, operand(n, 0).sum());
        break;
      case OpKind::mean: {
        const Matrix& a = operand(n, 0);
        if (a.size() == 0) shape_error(id, "mean of an empty operand");
        n.value = Matrix::Constant(1, 1, a.sum() / static_cast<double>(a.size()));
        break;
      }
      case OpKind::negate:
        n.value = -operand(n, 0);
        break;
    }
  }

  void evaluate_batch_norm(std::size_t id) {
    Node& n = nodes_[id];
    const Matrix& x = operand(n, 0);
    const Matrix& gamma = operand(n, 1);
    const Matrix& beta = operand(n, 2);
    const Index features = x.cols();
    if (gamma.rows() != 1 || gamma.cols() != features || beta.rows() != 1 ||
        beta.cols() != features) {
      shape_error(id, "gamma " + shape(gamma) + " / beta " + shape(beta) + " for input " + shape(x));
    }
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd var;
    if (n.training) {
      if (x.rows() == 0) shape_error(id, "empty batch");
      const double count = static_cast<double>(x.rows());
      mean = x.colwise().sum() / count;
      var = (x.rowwise() - mean).array().square().colwise().sum().matrix() / count;
      n.batch_mean = mean;
      n.batch_var_unbiased = x.rows() > 1 ? Matrix(var * (count / (count - 1.0))) : Matrix(var);
    } else {
      if (n.running_mean.cols() != features) {
        shape_error(id, "running statistics of width " + std::to_string(n.running_mean.cols()) +
                            " for input " + shape(x));
      }
      mean = n.running_mean.row(0);
      var = n.running_var.row(0);
    }
    n.inv_std = (var.array() + kBatchNormEpsilon).rsqrt().matrix();
    n.normalized = ((x.rowwise() - mean).array().rowwise() * n.inv_std.row(0).array()).matrix();
    n.value = (n.normalized.array().rowwise() * gamma.row(0).array()).matrix().rowwise() +
              beta.row(0);
  }

  void accumulate(Var target, const Matrix& delta) {
    Node& t = nodes_[target.id];
    if (!t.requires_grad) return;
    if (t.grad.size() == 0) {
      t.grad = delta;
    } else {
      t.grad += delta;
    }
  }

  template <class Expr>
  void accumulate_expr(Var target, const Expr& delta) {
    Node& t = nodes_[target.id];
    if (!t.requires_grad) return;
    if (t.grad.size() == 0) {
      t.grad = delta;
    } else {
      t.grad += delta;
    }
  }

  void propagate(std::size_t id) {
    Node& n = nodes_[id];
    const Matrix& g = n.grad;
    auto wants = [&](std::size_t k) { return nodes_[n.operands[k].id].requires_grad; };
    switch (n.kind) {
      case OpKind::input:
      case OpKind::constant:
        break;
      case OpKind::parameter: {
        Parameter& p = (*mutable_params_)[n.param];
        if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) {
          p.grad.setZero(p.value.rows(), p.value.cols());
        }
        p.grad += g;
        break;
      }
      case OpKind::matmul:
        if (wants(0)) accumulate_expr(n.operands[0], g * operand(n, 1).transpose());
        if (wants(1)) accumulate_expr(n.operands[1], operand(n, 0).transpose() * g);
        break;
      case OpKind::add:
        accumulate(n.operands[0], g);
        accumulate(n.operands[1], g);
        break;
      case OpKind::add_row:
        accumulate(n.operands[0], g);
        if (wants(1)) accumulate_expr(n.operands[1], g.colwise().sum());
        break;
      case OpKind::mul:
        if (wants(0)) accumulate_expr(n.operands[0], g.cwiseProduct(operand(n, 1)));
        if (wants(1)) accumulate_expr(n.operands[1], g.cwiseProduct(operand(n, 0)));
        break;
      case OpKind::scale:
        accumulate_expr(n.operands[0], g * n.factor);
        break;
      case OpKind::concat: {
        Index offset = 0;
        for (std::size_t k = 0; k < n.operands.size(); ++k) {
          const Index width = operand(n, k).cols();
          if (wants(k)) accumulate_expr(n.operands[k], g.middleCols(offset, width));
          offset += width;
        }
        break;
      }
      case OpKind::slice_cols: {
        const Matrix& a = operand(n, 0);
        Matrix full = Matrix::Zero(a.rows(), a.cols());
        full.middleCols(n.begin, n.count) = g;
        accumulate(n.operands[0], full);
        break;
      }
      case OpKind::relu:
        accumulate_expr(n.operands[0],
                        g.cwiseProduct(operand(n, 0).unaryExpr(
                            [](double x) { return x > 0.0 ? 1.0 : 0.0; })));
        break;
      case OpKind::sine:
        accumulate_expr(n.operands[0], g.cwiseProduct(operand(n, 0).array().cos().matrix()));
        break;
      case OpKind::log:
        accumulate_expr(n.operands[0], g.cwiseQuotient(operand(n, 0)));
        break;
      case OpKind::softplus:
        accumulate_expr(n.operands[0],
                        g.cwiseProduct(operand(n, 0).unaryExpr([](double x) { return sigmoid(x); })));
        break;
      case OpKind::batch_norm:
        propagate_batch_norm(id);
        break;
      case OpKind::sum: {
        const Matrix& a = operand(n, 0);
        accumulate_expr(n.operands[0], Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
        break;
      }
      case OpKind::mean: {
        const Matrix& a = operand(n, 0);
        accumulate_expr(n.operands[0],
                        Matrix::Constant(a.rows(), a.cols(), g(0, 0) / static_cast<double>(a.size())));
        break;
      }
      case OpKind::negate:
        accumulate_expr(n.operands[0], -g);
        break;
    }
  }

  void propagate_batch_norm(std::size_t id) {
    Node& n = nodes_[id];
    const Matrix& g = n.grad;
    const Matrix& gamma = operand(n, 1);
    if (nodes_[n.operands[2].id].requires_grad) accumulate_expr(n.operands[2], g.colwise().sum());
    if (nodes_[n.operands[1].id].requires_grad) {
      accumulate_expr(n.operands[1], g.cwiseProduct(n.normalized).colwise().sum());
    }
    if (!nodes_[n.operands[0].id].requires_grad) return;
    const Eigen::RowVectorXd scale = gamma.row(0).cwiseProduct(n.inv_std.row(0));
    if (!n.training) {
      accumulate_expr(n.operands[0], (g.array().rowwise() * scale.array()).matrix());
      return;
    }
    // dx = scale / N * (N * g - sum(g) - xhat * sum(g * xhat))
    const double count = static_cast<double>(g.rows());
    const Eigen::RowVectorXd g_sum = g.colwise().sum();
    const Eigen::RowVectorXd gx_sum = g.cwiseProduct(n.normalized).colwise().sum();
    Matrix dx = (g * count).rowwise() - g_sum;
    dx -= (n.normalized.array().rowwise() * gx_sum.array()).matrix();
    dx = (dx.array().rowwise() * (scale.array() / count)).matrix();
    accumulate(n.operands[0], dx);
  }

  const ParamSet* params_;
  ParamSet* mutable_params_ = nullptr;
  std::vector<Node> nodes_;
  bool evaluated_ = false;
  bool backward_done_ = false;
};

struct FiniteDifferenceReport {
  double max_error = 0.0;
  std::size_t checked = 0;
  /// Coordinates whose +-epsilon perturbation moved a ReLU input across 0.
  std::size_t skipped = 0;
};

/// Compares backward() against central differences for every parameter the
/// graph reads, using |a - b| / max(|a|, |b|, 1e-8). With skip_kinks set,
/// coordinates whose perturbation changes the ReLU activation pattern are
/// left out, since the derivative does not exist across the kink. Parameter
/// values and gradient buffers are restored afterwards; the graph is left
/// evaluated at the original parameters.
inline FiniteDifferenceReport finite_difference_report(Graph& graph, const InputMap& inputs, double epsilon,
                                                       bool skip_kinks) {
  if (!(epsilon > 0.0)) throw DomainError("finite_difference_check: epsilon must be positive");
  ParamSet& params = graph.params();
  const std::vector<std::size_t> used = graph.parameter_indices();
  std::vector<Matrix> saved_grads;
  saved_grads.reserve(used.size());
  for (std::size_t idx : used) {
    saved_grads.push_back(params[idx].grad);
    params[idx].grad.setZero(params[idx].value.rows(), params[idx].value.cols());
  }
  graph.forward(inputs);
  const std::vector<bool> pattern = skip_kinks ? graph.relu_pattern() : std::vector<bool>{};
  graph.backward();
  std::vector<Matrix> analytic;
  analytic.reserve(used.size());
  for (std::size_t idx : used) analytic.push_back(params[idx].grad);

  FiniteDifferenceReport report;
  for (std::size_t u = 0; u < used.size(); ++u) {
    Matrix& value = params[used[u]].value;
    for (Index k = 0; k < value.size(); ++k) {
      const double original = value.data()[k];
      value.data()[k] = original + epsilon;
      const double up = graph.forward(inputs)(0, 0);
      bool crossed = skip_kinks && graph.relu_pattern() != pattern;
      value.data()[k] = original - epsilon;
      const double down = graph.forward(inputs)(0, 0);
      crossed = crossed || (skip_kinks && graph.relu_pattern() != pattern);
      value.data()[k] = original;
      if (crossed) {
        ++report.skipped;
        continue;
      }
      const double numeric = (up - down) / (2.0 * epsilon);
      const double exact = analytic[u].data()[k];
      const double denom = std::max({std::abs(numeric), std::abs(exact), 1e-8});
      report.max_error = std::max(report.max_error, std::abs(numeric - exact) / denom);
      ++report.checked;
    }
  }
  for (std::size_t u = 0; u < used.size(); ++u) params[used[u]].grad = saved_grads[u];
  if (graph.size() > 0) graph.forward(inputs);
  return report;
}

/// Largest relative error over all parameter coordinates.
inline double finite_difference_check(Graph& graph, const InputMap& inputs, double epsilon) {
  return finite_difference_report(graph, inputs, epsilon, false).max_error;
}

}  // namespace ictsurf::ad
