// SPDX-License-Identifier: Apache-2.0

#include "drgd/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace drgd::ad {

namespace {

std::string dims(const Mat& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require(bool ok, const std::string& msg) {
  if (!ok) {
    throw std::invalid_argument(msg);
  }
}

}  // namespace

Mat& ensure_grad(Node& n) {
  if (n.grad.size() == 0) {
    n.grad = Mat::Zero(n.val.rows(), n.val.cols());
  }
  return n.grad;
}

std::string shape_of(const Var& v) { return dims(v.node->val); }

Var Tape::push(Mat val, std::function<void()> fn) {
  nodes_.push_back(Node{std::move(val), Mat(), std::move(fn)});
  return Var{&nodes_.back()};
}

Var Tape::constant(Mat v) { return push(std::move(v), nullptr); }

Var Tape::zeros(Eigen::Index rows, Eigen::Index cols) {
  return push(Mat::Zero(rows, cols), nullptr);
}

Var Tape::matmul(Var a, Var b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ (" +
                                    dims(a.node->val) + " vs " +
                                    dims(b.node->val) + ")");
  Node* an = a.node;
  Node* bn = b.node;
  Var out = push(an->val * bn->val, nullptr);
  Node* on = out.node;
  on->backprop = [an, bn, on] {
    ensure_grad(*an).noalias() += on->grad * bn->val.transpose();
    ensure_grad(*bn).noalias() += an->val.transpose() * on->grad;
  };
  return out;
}

Var Tape::add(Var a, Var b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          "add: shape mismatch (" + dims(a.node->val) + " vs " +
              dims(b.node->val) + ")");
  Node* an = a.node;
  Node* bn = b.node;
  Var out = push(an->val + bn->val, nullptr);
  Node* on = out.node;
  on->backprop = [an, bn, on] {
    ensure_grad(*an) += on->grad;
    ensure_grad(*bn) += on->grad;
  };
  return out;
}

Var Tape::sub(Var a, Var b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          "sub: shape mismatch (" + dims(a.node->val) + " vs " +
              dims(b.node->val) + ")");
  Node* an = a.node;
  Node* bn = b.node;
  Var out = push(an->val - bn->val, nullptr);
  Node* on = out.node;
  on->backprop = [an, bn, on] {
    ensure_grad(*an) += on->grad;
    ensure_grad(*bn) -= on->grad;
  };
  return out;
}

Var Tape::mul(Var a, Var b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          "mul: shape mismatch (" + dims(a.node->val) + " vs " +
              dims(b.node->val) + ")");
  Node* an = a.node;
  Node* bn = b.node;
  Var out = push(an->val.cwiseProduct(bn->val), nullptr);
  Node* on = out.node;
  on->backprop = [an, bn, on] {
    ensure_grad(*an) += on->grad.cwiseProduct(bn->val);
    ensure_grad(*bn) += on->grad.cwiseProduct(an->val);
  };
  return out;
}

Var Tape::add_colvec(Var a, Var v) {
  require(v.cols() == 1 && v.rows() == a.rows(),
          "add_colvec: need column vector matching rows (" +
              dims(a.node->val) + " vs " + dims(v.node->val) + ")");
  Node* an = a.node;
  Node* vn = v.node;
  Var out = push(an->val.colwise() + vn->val.col(0), nullptr);
  Node* on = out.node;
  on->backprop = [an, vn, on] {
    ensure_grad(*an) += on->grad;
    ensure_grad(*vn) += on->grad.rowwise().sum();
  };
  return out;
}

Var Tape::scale(Var a, double c) {
  Node* an = a.node;
  Var out = push(an->val * c, nullptr);
  Node* on = out.node;
  on->backprop = [an, on, c] { ensure_grad(*an) += on->grad * c; };
  return out;
}

Var Tape::sigmoid(Var x) {
  Node* xn = x.node;
  Mat y = xn->val.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  Var out = push(std::move(y), nullptr);
  Node* on = out.node;
  on->backprop = [xn, on] {
    ensure_grad(*xn).array() +=
        on->grad.array() * on->val.array() * (1.0 - on->val.array());
  };
  return out;
}

Var Tape::tanh(Var x) {
  Node* xn = x.node;
  Var out = push(xn->val.array().tanh().matrix(), nullptr);
  Node* on = out.node;
  on->backprop = [xn, on] {
    ensure_grad(*xn).array() +=
        on->grad.array() * (1.0 - on->val.array().square());
  };
  return out;
}

Var Tape::exp(Var x) {
  Node* xn = x.node;
  Var out = push(xn->val.array().exp().matrix(), nullptr);
  Node* on = out.node;
  on->backprop = [xn, on] {
    ensure_grad(*xn).array() += on->grad.array() * on->val.array();
  };
  return out;
}

Var Tape::log(Var x) {
  Node* xn = x.node;
  Var out = push(xn->val.array().log().matrix(), nullptr);
  Node* on = out.node;
  on->backprop = [xn, on] {
    ensure_grad(*xn).array() += on->grad.array() / xn->val.array();
  };
  return out;
}

Var Tape::clamp(Var x, double lo, double hi) {
  require(lo <= hi, "clamp: lo > hi");
  Node* xn = x.node;
  Var out = push(xn->val.array().max(lo).min(hi).matrix(), nullptr);
  Node* on = out.node;
  on->backprop = [xn, on, lo, hi] {
    ensure_grad(*xn).array() +=
        on->grad.array() *
        ((xn->val.array() >= lo) && (xn->val.array() <= hi)).cast<double>();
  };
  return out;
}

Var Tape::transpose(Var x) {
  Node* xn = x.node;
  Var out = push(xn->val.transpose(), nullptr);
  Node* on = out.node;
  on->backprop = [xn, on] { ensure_grad(*xn) += on->grad.transpose(); };
  return out;
}

Var Tape::concat_rows(Var a, Var b) {
  require(a.cols() == b.cols(), "concat_rows: column counts differ (" +
                                    dims(a.node->val) + " vs " +
                                    dims(b.node->val) + ")");
  Node* an = a.node;
  Node* bn = b.node;
  Mat v(a.rows() + b.rows(), a.cols());
  v << an->val, bn->val;
  Var out = push(std::move(v), nullptr);
  Node* on = out.node;
  on->backprop = [an, bn, on] {
    ensure_grad(*an) += on->grad.topRows(an->val.rows());
    ensure_grad(*bn) += on->grad.bottomRows(bn->val.rows());
  };
  return out;
}

Var Tape::concat_cols(Var a, Var b) {
  require(a.rows() == b.rows(), "concat_cols: row counts differ (" +
                                    dims(a.node->val) + " vs " +
                                    dims(b.node->val) + ")");
  Node* an = a.node;
  Node* bn = b.node;
  Mat v(a.rows(), a.cols() + b.cols());
  v << an->val, bn->val;
  Var out = push(std::move(v), nullptr);
  Node* on = out.node;
  on->backprop = [an, bn, on] {
    ensure_grad(*an) += on->grad.leftCols(an->val.cols());
    ensure_grad(*bn) += on->grad.rightCols(bn->val.cols());
  };
  return out;
}

Var Tape::stack_cols(const std::vector<Var>& cols) {
  require(!cols.empty(), "stack_cols: empty input");
  const Eigen::Index k = cols.front().rows();
  std::vector<Node*> in;
  in.reserve(cols.size());
  Mat v(k, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) {
    require(cols[i].cols() == 1 && cols[i].rows() == k,
            "stack_cols: column " + std::to_string(i) + " has shape " +
                dims(cols[i].node->val) + ", want " + std::to_string(k) + "x1");
    v.col(static_cast<Eigen::Index>(i)) = cols[i].node->val.col(0);
    in.push_back(cols[i].node);
  }
  Var out = push(std::move(v), nullptr);
  Node* on = out.node;
  on->backprop = [in = std::move(in), on] {
    for (std::size_t i = 0; i < in.size(); ++i) {
      ensure_grad(*in[i]) += on->grad.col(static_cast<Eigen::Index>(i));
    }
  };
  return out;
}

Var Tape::rows(Var x, const std::vector<int>& ids) {
  require(!ids.empty(), "rows: empty id list");
  Node* xn = x.node;
  const Eigen::Index n = xn->val.rows();
  Mat v(static_cast<Eigen::Index>(ids.size()), xn->val.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    require(ids[i] >= 0 && ids[i] < n,
            "rows: id " + std::to_string(ids[i]) + " at position " +
                std::to_string(i) + " out of range [0, " + std::to_string(n) +
                ")");
    v.row(static_cast<Eigen::Index>(i)) = xn->val.row(ids[i]);
  }
  Var out = push(std::move(v), nullptr);
  Node* on = out.node;
  on->backprop = [xn, on, ids] {
    Mat& g = ensure_grad(*xn);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      g.row(ids[i]) += on->grad.row(static_cast<Eigen::Index>(i));
    }
  };
  return out;
}

Var Tape::sum(Var x) {
  Node* xn = x.node;
  Mat v(1, 1);
  v(0, 0) = xn->val.sum();
  Var out = push(std::move(v), nullptr);
  Node* on = out.node;
  on->backprop = [xn, on] {
    ensure_grad(*xn).array() += on->grad(0, 0);
  };
  return out;
}

Var Tape::softmax_masked(Var x, const std::vector<std::uint8_t>& mask) {
  require(x.cols() == 1, "softmax_masked: need a column vector, got " +
                             dims(x.node->val));
  require(static_cast<Eigen::Index>(mask.size()) == x.rows(),
          "softmax_masked: mask length " + std::to_string(mask.size()) +
              " does not match vector length " + std::to_string(x.rows()));
  Node* xn = x.node;
  double mx = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (mask[static_cast<std::size_t>(i)] && xn->val(i, 0) > mx) {
      mx = xn->val(i, 0);
    }
  }
  require(std::isfinite(mx), "softmax_masked: every position is masked");
  Mat y = Mat::Zero(x.rows(), 1);
  double z = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (mask[static_cast<std::size_t>(i)]) {
      y(i, 0) = std::exp(xn->val(i, 0) - mx);
      z += y(i, 0);
    }
  }
  y /= z;
  Var out = push(std::move(y), nullptr);
  Node* on = out.node;
  on->backprop = [xn, on, mask] {
    // dL/dx_i = y_i * (g_i - sum_j g_j y_j) on unmasked entries
    const double dot = on->grad.cwiseProduct(on->val).sum();
    Mat& g = ensure_grad(*xn);
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      if (mask[static_cast<std::size_t>(i)]) {
        g(i, 0) += on->val(i, 0) * (on->grad(i, 0) - dot);
      }
    }
  };
  return out;
}

Var Tape::log_softmax(Var x) {
  require(x.cols() == 1, "log_softmax: need a column vector, got " +
                             dims(x.node->val));
  Node* xn = x.node;
  const double mx = xn->val.maxCoeff();
  const double lse = std::log((xn->val.array() - mx).exp().sum());
  Var out = push((xn->val.array() - mx - lse).matrix(), nullptr);
  Node* on = out.node;
  on->backprop = [xn, on] {
    const double gsum = on->grad.sum();
    ensure_grad(*xn).array() +=
        on->grad.array() - on->val.array().exp() * gsum;
  };
  return out;
}

void Tape::backward(Var loss) {
  require(loss.node != nullptr, "backward: null loss");
  require(loss.rows() == 1 && loss.cols() == 1,
          "backward: loss must be 1x1, got " + dims(loss.node->val));
  for (Node& n : nodes_) {
    n.grad.resize(0, 0);
  }
  ensure_grad(*loss.node)(0, 0) += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->backprop && it->grad.size() != 0) {
      it->backprop();
    }
  }
}

}  // namespace drgd::ad
