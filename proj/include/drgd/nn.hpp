// SPDX-License-Identifier: Apache-2.0
//
// Parameterized building blocks: embedding table, affine transform, GRU
// cell. All of them build their forward pass on an ad::Tape, so gradients
// come out of the single backward sweep.

#pragma once

#include <string>
#include <vector>

#include "drgd/autodiff.hpp"
#include "drgd/rng.hpp"

namespace drgd::nn {

// A persistent leaf: parameter values plus the additively accumulated
// gradient. Lives outside any tape.
struct Param {
  std::string name;
  ad::Node node;

  Param() = default;
  Param(std::string n, ad::Mat v) : name(std::move(n)) { node.val = std::move(v); }

  ad::Var var() { return ad::Var{&node}; }
  ad::Mat& value() { return node.val; }
  const ad::Mat& value() const { return node.val; }
  ad::Mat& grad() { return node.grad; }

  void zero_grad() { node.grad.resize(0, 0); }
};

// Glorot-uniform for weight matrices, zeros for biases, uniform(-0.08, 0.08)
// for embedding tables.
ad::Mat glorot_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng);
ad::Mat embedding_init(Eigen::Index rows, Eigen::Index cols, Rng& rng);

struct EmbeddingTable {
  Param weights;  // vocab_size x embed_dim

  EmbeddingTable() = default;
  EmbeddingTable(std::string name, Eigen::Index vocab_size,
                 Eigen::Index embed_dim, Rng& rng)
      : weights(std::move(name), embedding_init(vocab_size, embed_dim, rng)) {}

  Eigen::Index vocab_size() const { return weights.value().rows(); }
  Eigen::Index embed_dim() const { return weights.value().cols(); }
};

// Rows of the table selected by id; gradient flows only to selected rows.
ad::Var embed(ad::Tape& tape, EmbeddingTable& table,
              const std::vector<int>& ids);
// Single token as an embed_dim x 1 column.
ad::Var embed_col(ad::Tape& tape, EmbeddingTable& table, int id);

struct GruParams {
  // Gate weights against the input (hidden_dim x input_dim), the previous
  // state (hidden_dim x hidden_dim), and the biases (hidden_dim x 1).
  Param w_x_reset, w_x_update, w_x_cand;
  Param w_h_reset, w_h_update, w_h_cand;
  Param b_reset, b_update, b_cand;

  GruParams() = default;
  GruParams(const std::string& prefix, Eigen::Index input_dim,
            Eigen::Index hidden_dim, Rng& rng);

  Eigen::Index input_dim() const { return w_x_reset.value().cols(); }
  Eigen::Index hidden_dim() const { return w_x_reset.value().rows(); }

  std::vector<Param*> params();
};

// One GRU step:
//   reset  = sigmoid(Wxr x + Whr h + br)
//   update = sigmoid(Wxz x + Whz h + bz)
//   cand   = tanh(Wxh x + Whh (reset . h) + bh)
//   h'     = update . h + (1 - update) . cand
ad::Var gru_step(ad::Tape& tape, GruParams& p, ad::Var x, ad::Var h_prev);

struct AffineParams {
  Param w;  // out x in
  Param b;  // out x 1

  AffineParams() = default;
  AffineParams(const std::string& prefix, Eigen::Index in, Eigen::Index out,
               Rng& rng);

  std::vector<Param*> params() { return {&w, &b}; }
};

ad::Var affine(ad::Tape& tape, AffineParams& p, ad::Var x);

}  // namespace drgd::nn
