// SPDX-License-Identifier: Apache-2.0

#include "drgd/attention.hpp"

namespace drgd {

AttentionParams::AttentionParams(Eigen::Index hidden_dim, Rng& rng)
    : w_query("attention.w_query",
              nn::glorot_uniform(hidden_dim, hidden_dim, rng)),
      w_keys("attention.w_keys",
             nn::glorot_uniform(hidden_dim, 2 * hidden_dim, rng)),
      bias("attention.bias", ad::Mat::Zero(hidden_dim, 1)),
      score_vec("attention.score_vec", nn::glorot_uniform(hidden_dim, 1, rng)) {}

AttentionCache::AttentionCache(ad::Tape& t, AttentionParams& p,
                               const EncoderOutput& enc)
    : key_proj(t.matmul(p.w_keys.var(), enc.states_t)),
      score_row(t.transpose(p.score_vec.var())) {}

AttentionResult attend_cached(ad::Tape& t, AttentionParams& p,
                              const AttentionCache& cache, ad::Var h_layer1,
                              const EncoderOutput& enc) {
  ad::Var query = t.add(t.matmul(p.w_query.var(), h_layer1), p.bias.var());
  ad::Var scores =
      t.transpose(t.matmul(cache.score_row,
                           t.tanh(t.add_colvec(cache.key_proj, query))));
  AttentionResult out;
  out.weights = t.softmax_masked(scores, enc.mask);
  out.context = t.matmul(enc.states_t, out.weights);
  return out;
}

AttentionResult attend(ad::Tape& t, AttentionParams& p, ad::Var h_layer1,
                       const EncoderOutput& enc) {
  AttentionCache cache(t, p, enc);
  return attend_cached(t, p, cache, h_layer1, enc);
}

DecoderParams::DecoderParams(Eigen::Index embed_dim, Eigen::Index hidden_dim,
                             Rng& rng)
    : gru1("decoder.gru1", embed_dim, hidden_dim, rng),
      gru2("decoder.gru2", embed_dim + 2 * hidden_dim, hidden_dim, rng),
      attention(hidden_dim, rng) {}

std::vector<nn::Param*> DecoderParams::params() {
  std::vector<nn::Param*> out = gru1.params();
  for (nn::Param* p : gru2.params()) {
    out.push_back(p);
  }
  for (nn::Param* p : attention.params()) {
    out.push_back(p);
  }
  return out;
}

DecoderStepResult decoder_step_cached(ad::Tape& t, DecoderParams& p,
                                      const AttentionCache& cache,
                                      ad::Var y_prev_embedding,
                                      DecoderState state,
                                      const EncoderOutput& enc) {
  DecoderStepResult out;
  out.state.h_layer1 = gru_step(t, p.gru1, y_prev_embedding, state.h_layer1);
  AttentionResult attn =
      attend_cached(t, p.attention, cache, out.state.h_layer1, enc);
  out.weights = attn.weights;
  out.context = attn.context;
  // The paper's three-argument second layer: embedding and context enter as
  // one concatenated input vector.
  ad::Var gru2_in = t.concat_rows(y_prev_embedding, attn.context);
  out.state.h_layer2 = gru_step(t, p.gru2, gru2_in, state.h_layer2);
  return out;
}

DecoderStepResult decoder_step(ad::Tape& t, DecoderParams& p,
                               ad::Var y_prev_embedding, DecoderState state,
                               const EncoderOutput& enc) {
  AttentionCache cache(t, p.attention, enc);
  return decoder_step_cached(t, p, cache, y_prev_embedding, state, enc);
}

}  // namespace drgd
