#include "memejudge/fusion/autodiff.hpp"

#include <cmath>
#include <numbers>

#include "memejudge/common/errors.hpp"

namespace memejudge::fusion {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ValidationError(std::string("tape: ") + what);
}

Matrix row_softmax(const Matrix& x) {
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mx = x.row(r).maxCoeff();
    y.row(r) = (x.row(r).array() - mx).exp();
    y.row(r) /= y.row(r).sum();
  }
  return y;
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;

}  // namespace

Tape::Var Tape::push(Matrix value, std::function<void(Tape&, int)> backprop) {
  Node n;
  n.value = std::move(value);
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tape::Var Tape::constant(Matrix value) { return push(std::move(value)); }

Tape::Var Tape::param(const Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var{it->second};
  Var out = push(Matrix());
  nodes_.back().external = &p.value;
  param_nodes_.emplace(&p, out.id);
  return out;
}

std::optional<Tape::Var> Tape::find_param(const Parameter& p) const {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var{it->second};
  return std::nullopt;
}

void Tape::accumulate(Parameter& p) const {
  if (p.frozen) return;
  auto var = find_param(p);
  if (!var) return;
  const Matrix& gr = grad(*var);
  if (gr.size() == 0) return;
  if (p.grad.rows() != gr.rows() || p.grad.cols() != gr.cols()) p.zero_grad();
  p.grad += gr;
}

Tape::Var Tape::matmul(Var a, Var b) {
  require(v(a.id).cols() == v(b.id).rows(), "matmul shape mismatch");
  return push(v(a.id) * v(b.id), [a, b](Tape& t, int self) {
    const Matrix& d = t.g(self);
    t.g(a.id) += d * t.v(b.id).transpose();
    t.g(b.id) += t.v(a.id).transpose() * d;
  });
}

Tape::Var Tape::matmul_nt(Var a, Var b) {
  require(v(a.id).cols() == v(b.id).cols(), "matmul_nt shape mismatch");
  return push(v(a.id) * v(b.id).transpose(), [a, b](Tape& t, int self) {
    const Matrix& d = t.g(self);
    t.g(a.id) += d * t.v(b.id);
    t.g(b.id) += d.transpose() * t.v(a.id);
  });
}

Tape::Var Tape::add(Var a, Var b) {
  require(v(a.id).rows() == v(b.id).rows() && v(a.id).cols() == v(b.id).cols(), "add shape mismatch");
  return push(v(a.id) + v(b.id), [a, b](Tape& t, int self) {
    t.g(a.id) += t.g(self);
    t.g(b.id) += t.g(self);
  });
}

Tape::Var Tape::add_bias(Var x, Var row) {
  require(v(row.id).rows() == 1 && v(row.id).cols() == v(x.id).cols(), "add_bias shape mismatch");
  Matrix out = v(x.id);
  out.rowwise() += v(row.id).row(0);
  return push(std::move(out), [x, row](Tape& t, int self) {
    t.g(x.id) += t.g(self);
    t.g(row.id) += t.g(self).colwise().sum();
  });
}

Tape::Var Tape::add_constant(Var x, const Matrix& c) {
  require(v(x.id).rows() == c.rows() && v(x.id).cols() == c.cols(), "add_constant shape mismatch");
  return push(v(x.id) + c, [x](Tape& t, int self) { t.g(x.id) += t.g(self); });
}

Tape::Var Tape::mul(Var a, Var b) {
  require(v(a.id).rows() == v(b.id).rows() && v(a.id).cols() == v(b.id).cols(), "mul shape mismatch");
  return push(v(a.id).cwiseProduct(v(b.id)), [a, b](Tape& t, int self) {
    const Matrix& d = t.g(self);
    t.g(a.id) += d.cwiseProduct(t.v(b.id));
    t.g(b.id) += d.cwiseProduct(t.v(a.id));
  });
}

Tape::Var Tape::scale(Var x, double s) {
  return push(v(x.id) * s, [x, s](Tape& t, int self) { t.g(x.id) += t.g(self) * s; });
}

Tape::Var Tape::gelu(Var x) {
  const Matrix& in = v(x.id);
  Matrix out = in.unaryExpr([](double z) { return 0.5 * z * (1.0 + std::tanh(kGeluC * (z + kGeluA * z * z * z))); });
  return push(std::move(out), [x](Tape& t, int self) {
    const Matrix& z = t.v(x.id);
    Matrix dz = z.unaryExpr([](double q) {
      const double th = std::tanh(kGeluC * (q + kGeluA * q * q * q));
      return 0.5 * (1.0 + th) + 0.5 * q * (1.0 - th * th) * kGeluC * (1.0 + 3.0 * kGeluA * q * q);
    });
    t.g(x.id) += t.g(self).cwiseProduct(dz);
  });
}

Tape::Var Tape::rms_norm(Var x, Var gain, double eps) {
  const Matrix& in = v(x.id);
  require(v(gain.id).rows() == 1 && v(gain.id).cols() == in.cols(), "rms_norm gain shape mismatch");
  const auto cols = static_cast<double>(in.cols());
  Eigen::VectorXd inv(in.rows());
  Matrix norm(in.rows(), in.cols());
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    inv(r) = 1.0 / std::sqrt(in.row(r).squaredNorm() / cols + eps);
    norm.row(r) = in.row(r) * inv(r);
  }
  Matrix out = norm;
  for (Eigen::Index r = 0; r < out.rows(); ++r) out.row(r) = out.row(r).cwiseProduct(v(gain.id).row(0));
  return push(std::move(out), [x, gain, inv, norm, cols](Tape& t, int self) {
    const Matrix& d = t.g(self);
    const auto gain_row = t.v(gain.id).row(0);
    t.g(gain.id) += d.cwiseProduct(norm).colwise().sum();
    for (Eigen::Index r = 0; r < d.rows(); ++r) {
      Eigen::RowVectorXd dn = d.row(r).cwiseProduct(gain_row);
      const double proj = dn.dot(norm.row(r)) / cols;
      t.g(x.id).row(r) += (dn - norm.row(r) * proj) * inv(r);
    }
  });
}

Tape::Var Tape::softmax_rows(Var x) {
  return push(row_softmax(v(x.id)), [x](Tape& t, int self) {
    const Matrix& y = t.v(self);
    const Matrix& d = t.g(self);
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      const double dot = d.row(r).dot(y.row(r));
      t.g(x.id).row(r) += y.row(r).cwiseProduct((d.row(r).array() - dot).matrix());
    }
  });
}

Tape::Var Tape::log_softmax_rows(Var x) {
  const Matrix& in = v(x.id);
  Matrix out(in.rows(), in.cols());
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    const double mx = in.row(r).maxCoeff();
    const double lse = mx + std::log((in.row(r).array() - mx).exp().sum());
    out.row(r) = in.row(r).array() - lse;
  }
  return push(std::move(out), [x](Tape& t, int self) {
    const Matrix& y = t.v(self);
    const Matrix& d = t.g(self);
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      t.g(x.id).row(r) += d.row(r) - y.row(r).array().exp().matrix() * d.row(r).sum();
    }
  });
}

Tape::Var Tape::gather_rows(Var table, std::span<const int> ids) {
  const Matrix& tab = v(table.id);
  Matrix out(static_cast<Eigen::Index>(ids.size()), tab.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    require(ids[i] >= 0 && ids[i] < tab.rows(), "gather_rows id out of range");
    out.row(static_cast<Eigen::Index>(i)) = tab.row(ids[i]);
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return push(std::move(out), [table, idx = std::move(idx)](Tape& t, int self) {
    const Matrix& d = t.g(self);
    for (std::size_t i = 0; i < idx.size(); ++i) t.g(table.id).row(idx[i]) += d.row(static_cast<Eigen::Index>(i));
  });
}

Tape::Var Tape::slice_cols(Var x, int start, int width) {
  require(start >= 0 && width >= 0 && start + width <= v(x.id).cols(), "slice_cols out of range");
  return push(v(x.id).middleCols(start, width),
              [x, start, width](Tape& t, int self) { t.g(x.id).middleCols(start, width) += t.g(self); });
}

Tape::Var Tape::concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols of nothing");
  const Eigen::Index rows = v(parts[0].id).rows();
  Eigen::Index cols = 0;
  for (Var p : parts) {
    require(v(p.id).rows() == rows, "concat_cols row mismatch");
    cols += v(p.id).cols();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (Var p : parts) {
    out.middleCols(at, v(p.id).cols()) = v(p.id);
    at += v(p.id).cols();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return push(std::move(out), [ps = std::move(ps)](Tape& t, int self) {
    Eigen::Index off = 0;
    for (Var p : ps) {
      const Eigen::Index w = t.v(p.id).cols();
      t.g(p.id) += t.g(self).middleCols(off, w);
      off += w;
    }
  });
}

Tape::Var Tape::gather_bias(Var table, int column, const IndexMatrix& index) {
  const Matrix& tab = v(table.id);
  require(column >= 0 && column < tab.cols(), "gather_bias column out of range");
  Matrix out(index.rows(), index.cols());
  for (Eigen::Index i = 0; i < index.rows(); ++i) {
    for (Eigen::Index j = 0; j < index.cols(); ++j) {
      require(index(i, j) >= 0 && index(i, j) < tab.rows(), "gather_bias index out of range");
      out(i, j) = tab(index(i, j), column);
    }
  }
  return push(std::move(out), [table, column, index](Tape& t, int self) {
    const Matrix& d = t.g(self);
    Matrix& gt = t.g(table.id);
    for (Eigen::Index i = 0; i < index.rows(); ++i) {
      for (Eigen::Index j = 0; j < index.cols(); ++j) gt(index(i, j), column) += d(i, j);
    }
  });
}

Tape::Var Tape::pick(Var x, std::span<const std::pair<int, int>> cells) {
  const Matrix& in = v(x.id);
  Matrix out(1, static_cast<Eigen::Index>(cells.size()));
  for (std::size_t k = 0; k < cells.size(); ++k) {
    require(cells[k].first >= 0 && cells[k].first < in.rows() && cells[k].second >= 0 && cells[k].second < in.cols(),
            "pick out of range");
    out(0, static_cast<Eigen::Index>(k)) = in(cells[k].first, cells[k].second);
  }
  std::vector<std::pair<int, int>> cs(cells.begin(), cells.end());
  return push(std::move(out), [x, cs = std::move(cs)](Tape& t, int self) {
    for (std::size_t k = 0; k < cs.size(); ++k) {
      t.g(x.id)(cs[k].first, cs[k].second) += t.g(self)(0, static_cast<Eigen::Index>(k));
    }
  });
}

Tape::Var Tape::mean_all(Var x) {
  const auto n = static_cast<double>(v(x.id).size());
  require(n > 0, "mean of empty tensor");
  Matrix out(1, 1);
  out(0, 0) = v(x.id).sum() / n;
  return push(std::move(out), [x, n](Tape& t, int self) { t.g(x.id).array() += t.g(self)(0, 0) / n; });
}

Tape::Var Tape::sum_all(Var x) {
  Matrix out(1, 1);
  out(0, 0) = v(x.id).sum();
  return push(std::move(out), [x](Tape& t, int self) { t.g(x.id).array() += t.g(self)(0, 0); });
}

void Tape::backward(Var root) {
  require(root.valid() && v(root.id).rows() == 1 && v(root.id).cols() == 1, "backward root must be a scalar");
  for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
    nodes_[static_cast<std::size_t>(i)].grad = Matrix::Zero(v(i).rows(), v(i).cols());
  }
  g(root.id)(0, 0) = 1.0;
  for (int i = root.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.backprop) n.backprop(*this, i);
  }
}

}  // namespace memejudge::fusion
