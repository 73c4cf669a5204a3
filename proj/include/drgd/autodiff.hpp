// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode automatic differentiation over dense real matrices (double
// precision throughout). Forward values are computed eagerly; every
// operation appends a record to a Tape, and backward() replays the records
// once in reverse order.
//
// Ownership: a Tape owns the nodes its operations create (including
// constants). Leaf nodes for parameters live outside any tape and must
// outlive every tape that references them. Var handles stay valid until the
// owning tape is cleared.
//
// Gradient discipline: backward() first wipes the gradients of tape-owned
// nodes, then seeds the loss with 1 and accumulates additively into leaves.
// Leaf gradients persist across tapes until explicitly zeroed, so running
// backward twice on the same tape leaves exactly 2x gradients behind.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <vector>

namespace drgd::ad {

using Mat = Eigen::MatrixXd;

struct Node {
  Mat val;
  Mat grad;                        // 0x0 until backward touches it
  std::function<void()> backprop;  // empty for leaves
};

// Sizes grad to match val (zero-filled) on first use.
Mat& ensure_grad(Node& n);

struct Var {
  Node* node = nullptr;

  Eigen::Index rows() const { return node->val.rows(); }
  Eigen::Index cols() const { return node->val.cols(); }
  const Mat& value() const { return node->val; }
  const Mat& grad() const { return node->grad; }
};

std::string shape_of(const Var& v);

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf owned by this tape; no gradient flows out of it.
  Var constant(Mat v);
  Var zeros(Eigen::Index rows, Eigen::Index cols);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  // a (m x n) plus column vector v (m x 1) added to every column.
  Var add_colvec(Var a, Var v);
  Var scale(Var a, double c);

  Var sigmoid(Var x);
  Var tanh(Var x);
  Var exp(Var x);
  Var log(Var x);
  // Pass-through gradient inside [lo, hi], zero outside.
  Var clamp(Var x, double lo, double hi);

  Var transpose(Var x);
  Var concat_rows(Var a, Var b);  // stack vertically
  Var concat_cols(Var a, Var b);  // stack horizontally
  // All columns must be k x 1; result is k x n.
  Var stack_cols(const std::vector<Var>& cols);
  // Row gather: result row i is x row ids[i]; gradient flows only to the
  // selected rows.
  Var rows(Var x, const std::vector<int>& ids);

  Var sum(Var x);  // 1x1

  // Softmax over a column vector with a validity mask. Masked entries come
  // out exactly 0; unmasked entries are a stable softmax of their scores.
  Var softmax_masked(Var x, const std::vector<std::uint8_t>& mask);
  // Numerically stable fused log-softmax over a column vector.
  Var log_softmax(Var x);

  // Seeds loss (must be 1x1) with gradient 1 and sweeps the tape in reverse.
  void backward(Var loss);

  void clear() { nodes_.clear(); }
  std::size_t size() const { return nodes_.size(); }

 private:
  Var push(Mat val, std::function<void()> fn);

  std::deque<Node> nodes_;
};

}  // namespace drgd::ad
