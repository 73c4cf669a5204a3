// SPDX-License-Identifier: Apache-2.0
//
// Bidirectional GRU encoder. Runs the source sequence left-to-right and
// right-to-left with independent parameter sets (both starting from a zero
// state) and concatenates the per-position states.

#pragma once

#include <cstdint>
#include <vector>

#include "drgd/nn.hpp"

namespace drgd {

struct EncoderParams {
  nn::GruParams forward_gru;
  nn::GruParams backward_gru;
  // Reconciles the 2*hidden mean of the encoder states down to the decoder
  // state width (tanh of a learned affine).
  nn::AffineParams init_proj;

  EncoderParams() = default;
  EncoderParams(Eigen::Index embed_dim, Eigen::Index hidden_dim, Rng& rng);

  std::vector<nn::Param*> params();
};

struct EncoderOutput {
  ad::Var states;    // T x 2*hidden, row t = [fwd_t ; bwd_t], masked rows zero
  ad::Var states_t;  // 2*hidden x T, same values transposed
  ad::Var init_state;  // hidden x 1, shared initial state of both decoder GRUs
  std::vector<std::uint8_t> mask;  // validity per position
};

// source_ids must be the unpadded token sequence (every position valid), or
// a padded sequence with `valid` marking the true prefix.
EncoderOutput encode(ad::Tape& tape, EncoderParams& p,
                     nn::EmbeddingTable& source_embeddings,
                     const std::vector<int>& source_ids,
                     std::size_t valid_prefix);

EncoderOutput encode(ad::Tape& tape, EncoderParams& p,
                     nn::EmbeddingTable& source_embeddings,
                     const std::vector<int>& source_ids);

// Mean of the unmasked state rows followed by the learned projection; used
// as the initial state of both decoder layers. Exposed for tests; encode()
// already fills EncoderOutput::init_state with it.
ad::Var initial_decoder_state(ad::Tape& tape, EncoderParams& p,
                              ad::Var states_t,
                              const std::vector<std::uint8_t>& mask);

}  // namespace drgd
