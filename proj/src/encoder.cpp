// SPDX-License-Identifier: Apache-2.0

#include "drgd/encoder.hpp"

#include <stdexcept>

namespace drgd {

EncoderParams::EncoderParams(Eigen::Index embed_dim, Eigen::Index hidden_dim,
                             Rng& rng)
    : forward_gru("encoder.fwd", embed_dim, hidden_dim, rng),
      backward_gru("encoder.bwd", embed_dim, hidden_dim, rng),
      init_proj("encoder.init", 2 * hidden_dim, hidden_dim, rng) {}

std::vector<nn::Param*> EncoderParams::params() {
  std::vector<nn::Param*> out = forward_gru.params();
  for (nn::Param* p : backward_gru.params()) {
    out.push_back(p);
  }
  for (nn::Param* p : init_proj.params()) {
    out.push_back(p);
  }
  return out;
}

ad::Var initial_decoder_state(ad::Tape& t, EncoderParams& p, ad::Var states_t,
                              const std::vector<std::uint8_t>& mask) {
  std::size_t valid = 0;
  for (std::uint8_t m : mask) {
    valid += m ? 1 : 0;
  }
  if (valid == 0) {
    throw std::invalid_argument("initial_decoder_state: every position is masked");
  }
  // Mean over unmasked rows as a single matvec against a selector vector.
  ad::Mat sel = ad::Mat::Zero(static_cast<Eigen::Index>(mask.size()), 1);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) {
      sel(static_cast<Eigen::Index>(i), 0) = 1.0 / static_cast<double>(valid);
    }
  }
  ad::Var mean = t.matmul(states_t, t.constant(std::move(sel)));
  return t.tanh(affine(t, p.init_proj, mean));
}

EncoderOutput encode(ad::Tape& t, EncoderParams& p,
                     nn::EmbeddingTable& source_embeddings,
                     const std::vector<int>& source_ids,
                     std::size_t valid_prefix) {
  if (source_ids.empty() || valid_prefix == 0) {
    throw std::invalid_argument("encode: empty source");
  }
  if (valid_prefix > source_ids.size()) {
    throw std::invalid_argument("encode: valid prefix exceeds sequence length");
  }
  const std::size_t total = source_ids.size();
  const Eigen::Index hidden = p.forward_gru.hidden_dim();

  std::vector<ad::Var> inputs(valid_prefix);
  for (std::size_t i = 0; i < valid_prefix; ++i) {
    inputs[i] = nn::embed_col(t, source_embeddings, source_ids[i]);
  }

  std::vector<ad::Var> fwd(valid_prefix), bwd(valid_prefix);
  ad::Var h = t.zeros(hidden, 1);
  for (std::size_t i = 0; i < valid_prefix; ++i) {
    h = gru_step(t, p.forward_gru, inputs[i], h);
    fwd[i] = h;
  }
  h = t.zeros(hidden, 1);
  for (std::size_t i = valid_prefix; i-- > 0;) {
    h = gru_step(t, p.backward_gru, inputs[i], h);
    bwd[i] = h;
  }

  ad::Var zero_col = t.zeros(2 * hidden, 1);
  std::vector<ad::Var> columns(total);
  for (std::size_t i = 0; i < total; ++i) {
    columns[i] = i < valid_prefix ? t.concat_rows(fwd[i], bwd[i]) : zero_col;
  }

  EncoderOutput out;
  out.states_t = t.stack_cols(columns);
  out.states = t.transpose(out.states_t);
  out.mask.assign(total, 0);
  for (std::size_t i = 0; i < valid_prefix; ++i) {
    out.mask[i] = 1;
  }
  out.init_state = initial_decoder_state(t, p, out.states_t, out.mask);
  return out;
}

EncoderOutput encode(ad::Tape& t, EncoderParams& p,
                     nn::EmbeddingTable& source_embeddings,
                     const std::vector<int>& source_ids) {
  return encode(t, p, source_embeddings, source_ids, source_ids.size());
}

}  // namespace drgd
