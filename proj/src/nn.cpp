// SPDX-License-Identifier: Apache-2.0

#include "drgd/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace drgd::nn {

ad::Mat glorot_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  ad::Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(i, j) = rng.uniform(-limit, limit);
    }
  }
  return m;
}

ad::Mat embedding_init(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  ad::Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(i, j) = rng.uniform(-0.08, 0.08);
    }
  }
  return m;
}

ad::Var embed(ad::Tape& tape, EmbeddingTable& table,
              const std::vector<int>& ids) {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.vocab_size()) {
      throw std::out_of_range("embed: token id " + std::to_string(ids[i]) +
                              " at position " + std::to_string(i) +
                              " outside vocabulary of size " +
                              std::to_string(table.vocab_size()));
    }
  }
  return tape.rows(table.weights.var(), ids);
}

ad::Var embed_col(ad::Tape& tape, EmbeddingTable& table, int id) {
  return tape.transpose(embed(tape, table, {id}));
}

GruParams::GruParams(const std::string& prefix, Eigen::Index input_dim,
                     Eigen::Index hidden_dim, Rng& rng)
    : w_x_reset(prefix + ".w_x_reset", glorot_uniform(hidden_dim, input_dim, rng)),
      w_x_update(prefix + ".w_x_update", glorot_uniform(hidden_dim, input_dim, rng)),
      w_x_cand(prefix + ".w_x_cand", glorot_uniform(hidden_dim, input_dim, rng)),
      w_h_reset(prefix + ".w_h_reset", glorot_uniform(hidden_dim, hidden_dim, rng)),
      w_h_update(prefix + ".w_h_update", glorot_uniform(hidden_dim, hidden_dim, rng)),
      w_h_cand(prefix + ".w_h_cand", glorot_uniform(hidden_dim, hidden_dim, rng)),
      b_reset(prefix + ".b_reset", ad::Mat::Zero(hidden_dim, 1)),
      b_update(prefix + ".b_update", ad::Mat::Zero(hidden_dim, 1)),
      b_cand(prefix + ".b_cand", ad::Mat::Zero(hidden_dim, 1)) {}

std::vector<Param*> GruParams::params() {
  return {&w_x_reset, &w_x_update, &w_x_cand, &w_h_reset, &w_h_update,
          &w_h_cand,  &b_reset,    &b_update, &b_cand};
}

ad::Var gru_step(ad::Tape& t, GruParams& p, ad::Var x, ad::Var h_prev) {
  if (x.cols() != 1 || x.rows() != p.input_dim()) {
    throw std::invalid_argument(
        "gru_step: input has shape " + shape_of(x) + ", want " +
        std::to_string(p.input_dim()) + "x1");
  }
  if (h_prev.cols() != 1 || h_prev.rows() != p.hidden_dim()) {
    throw std::invalid_argument(
        "gru_step: state has shape " + shape_of(h_prev) + ", want " +
        std::to_string(p.hidden_dim()) + "x1");
  }
  ad::Var reset = t.sigmoid(t.add(
      t.add(t.matmul(p.w_x_reset.var(), x), t.matmul(p.w_h_reset.var(), h_prev)),
      p.b_reset.var()));
  ad::Var update = t.sigmoid(t.add(
      t.add(t.matmul(p.w_x_update.var(), x), t.matmul(p.w_h_update.var(), h_prev)),
      p.b_update.var()));
  ad::Var cand = t.tanh(t.add(
      t.add(t.matmul(p.w_x_cand.var(), x),
            t.matmul(p.w_h_cand.var(), t.mul(reset, h_prev))),
      p.b_cand.var()));
  ad::Var keep = t.mul(update, h_prev);
  ad::Var ones = t.constant(ad::Mat::Ones(p.hidden_dim(), 1));
  return t.add(keep, t.mul(t.sub(ones, update), cand));
}

AffineParams::AffineParams(const std::string& prefix, Eigen::Index in,
                           Eigen::Index out, Rng& rng)
    : w(prefix + ".w", glorot_uniform(out, in, rng)),
      b(prefix + ".b", ad::Mat::Zero(out, 1)) {}

ad::Var affine(ad::Tape& t, AffineParams& p, ad::Var x) {
  if (x.cols() != 1 || x.rows() != p.w.value().cols()) {
    throw std::invalid_argument("affine: input has shape " + shape_of(x) +
                                ", want " +
                                std::to_string(p.w.value().cols()) + "x1");
  }
  return t.add(t.matmul(p.w.var(), x), p.b.var());
}

}  // namespace drgd::nn
