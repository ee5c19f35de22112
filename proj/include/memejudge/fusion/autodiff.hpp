#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace memejudge::fusion {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using IndexMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A named tensor with its accumulated gradient. Frozen parameters never receive gradients.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool frozen = false;

  Parameter() = default;
  Parameter(std::string n, Matrix v, bool is_frozen = false)
      : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())), frozen(is_frozen) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

// Reverse-mode tape over dense row-major matrices. Nodes are recorded in creation order,
// which is a valid topological order, and backward() walks them in reverse.
class Tape {
 public:
  struct Var {
    int id = -1;
    bool valid() const noexcept { return id >= 0; }
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  // References p.value without copying; one node per parameter per tape.
  Var param(const Parameter& p);
  std::optional<Var> find_param(const Parameter& p) const;
  // Adds this tape's gradient for `p` into p.grad (no-op for frozen or unused parameters).
  void accumulate(Parameter& p) const;

  const Matrix& value(Var v) const { return v_(v.id); }
  const Matrix& grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].grad; }
  double scalar(Var v) const { return value(v)(0, 0); }
  std::size_t size() const noexcept { return nodes_.size(); }

  Var matmul(Var a, Var b);     // a * b
  Var matmul_nt(Var a, Var b);  // a * b^T
  Var add(Var a, Var b);
  Var add_bias(Var x, Var row);  // row [1, cols] broadcast over rows
  Var add_constant(Var x, const Matrix& c);
  Var mul(Var a, Var b);  // elementwise
  Var scale(Var x, double s);
  Var gelu(Var x);  // tanh approximation
  Var rms_norm(Var x, Var gain, double eps);
  Var softmax_rows(Var x);
  Var log_softmax_rows(Var x);
  Var gather_rows(Var table, std::span<const int> ids);
  Var slice_cols(Var x, int start, int width);
  Var concat_cols(std::span<const Var> parts);
  // out(i, j) = table(index(i, j), column)
  Var gather_bias(Var table, int column, const IndexMatrix& index);
  // [1, k] row of x(cells[t].first, cells[t].second)
  Var pick(Var x, std::span<const std::pair<int, int>> cells);
  Var mean_all(Var x);
  Var sum_all(Var x);

  // Seeds d(root)/d(root) = 1 and fills grad() for every node.
  void backward(Var root);

 private:
  struct Node {
    Matrix value;
    const Matrix* external = nullptr;
    Matrix grad;
    std::function<void(Tape&, int)> backprop;  // propagates this node's grad to its inputs
  };

  Var push(Matrix value, std::function<void(Tape&, int)> backprop = {});
  Matrix& g(int id) { return nodes_[static_cast<std::size_t>(id)].grad; }
  const Matrix& v_(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return n.external != nullptr ? *n.external : n.value;
  }
  const Matrix& v(int id) const { return v_(id); }

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
};

}  // namespace memejudge::fusion
