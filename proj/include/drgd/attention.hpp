// SPDX-License-Identifier: Apache-2.0
//
// Deterministic half of the decoder: GRU layer 1 over the previous output
// embedding, additive attention over the encoder states, GRU layer 2 over
// the embedding concatenated with the attention context.

#pragma once

#include <vector>

#include "drgd/encoder.hpp"
#include "drgd/nn.hpp"

namespace drgd {

struct AttentionParams {
  nn::Param w_query;    // hidden x hidden, applied to the layer-1 state
  nn::Param w_keys;     // hidden x 2*hidden, applied to encoder states
  nn::Param bias;       // hidden x 1
  nn::Param score_vec;  // hidden x 1

  AttentionParams() = default;
  AttentionParams(Eigen::Index hidden_dim, Rng& rng);

  std::vector<nn::Param*> params() {
    return {&w_query, &w_keys, &bias, &score_vec};
  }
};

struct AttentionResult {
  ad::Var weights;  // T x 1 probabilities, exactly 0 on masked positions
  ad::Var context;  // 2*hidden x 1
};

// score_j = score_vec' tanh(w_query h + w_keys enc_j + bias); weights are the
// masked softmax of the scores; context is the weighted sum of encoder
// states.
AttentionResult attend(ad::Tape& tape, AttentionParams& p, ad::Var h_layer1,
                       const EncoderOutput& enc);

// Per-example cache: the key projection w_keys * states_t does not depend on
// the decoding step, so it is computed once on the tape and shared.
struct AttentionCache {
  ad::Var key_proj;   // hidden x T
  ad::Var score_row;  // 1 x hidden, score_vec transposed

  AttentionCache() = default;
  AttentionCache(ad::Tape& tape, AttentionParams& p, const EncoderOutput& enc);
};

AttentionResult attend_cached(ad::Tape& tape, AttentionParams& p,
                              const AttentionCache& cache, ad::Var h_layer1,
                              const EncoderOutput& enc);

struct DecoderState {
  ad::Var h_layer1;  // hidden x 1
  ad::Var h_layer2;  // hidden x 1
};

struct DecoderParams {
  nn::GruParams gru1;  // input: embed_dim
  nn::GruParams gru2;  // input: embed_dim + 2*hidden (embedding || context)
  AttentionParams attention;

  DecoderParams() = default;
  DecoderParams(Eigen::Index embed_dim, Eigen::Index hidden_dim, Rng& rng);

  std::vector<nn::Param*> params();
};

struct DecoderStepResult {
  DecoderState state;
  ad::Var context;  // 2*hidden x 1
  ad::Var weights;  // T x 1
};

DecoderStepResult decoder_step(ad::Tape& tape, DecoderParams& p,
                               ad::Var y_prev_embedding, DecoderState state,
                               const EncoderOutput& enc);

// Same computation with the shared key projection.
DecoderStepResult decoder_step_cached(ad::Tape& tape, DecoderParams& p,
                                      const AttentionCache& cache,
                                      ad::Var y_prev_embedding,
                                      DecoderState state,
                                      const EncoderOutput& enc);

}  // namespace drgd
