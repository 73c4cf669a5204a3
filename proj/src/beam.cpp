// SPDX-License-Identifier: Apache-2.0

#include "drgd/beam.hpp"

namespace drgd::beam {

ModelSearch::ModelSearch(ModelParams& params, const std::vector<int>& source,
                         bool deterministic_z, Rng* rng)
    : params_(params),
      enc_(encode(tape_, params.encoder, params.source_embeddings, source)),
      cache_(tape_, params.decoder.attention, enc_),
      deterministic_z_(deterministic_z),
      rng_(rng) {
  if (!deterministic_z_ && rng_ == nullptr) {
    throw std::invalid_argument("ModelSearch: sampling mode needs an rng");
  }
}

ModelSearch::Stepped ModelSearch::run_step(const State& state, int token) {
  const ad::Mat* eps_ptr = nullptr;
  ad::Mat eps;
  if (!deterministic_z_ && params_.config.mode == DecoderMode::kDrgd) {
    eps.resize(params_.config.latent_dim, 1);
    for (Eigen::Index i = 0; i < eps.rows(); ++i) {
      eps(i, 0) = rng_->gaussian();
    }
    eps_ptr = &eps;
  }
  StepOutput out = step_inference(tape_, params_, cache_, token, state.decoder,
                                  state.latent, enc_, deterministic_z_,
                                  eps_ptr);
  Stepped s;
  s.log_probs = out.log_probs.value().col(0);
  s.state = State{out.state, out.latent};
  return s;
}

ModelSearch::Stepped ModelSearch::start() {
  State init;
  init.decoder = initial_decoder(enc_);
  init.latent = initial_latent(tape_, params_.config);
  return run_step(init, data::kBosId);
}

ModelSearch::Stepped ModelSearch::advance(const State& state, int token) {
  return run_step(state, token);
}

std::vector<DecodeResult> decode_source(ModelParams& params,
                                        const std::vector<int>& source,
                                        std::size_t beam_size,
                                        std::size_t max_len,
                                        bool deterministic_z, Rng* rng,
                                        double length_alpha) {
  ModelSearch search(params, source, deterministic_z, rng);
  auto hyps = beam_search(search, beam_size, max_len, length_alpha);
  std::vector<DecodeResult> out;
  out.reserve(hyps.size());
  for (const auto& h : hyps) {
    out.push_back(DecodeResult{h.tokens, h.log_prob});
  }
  return out;
}

}  // namespace drgd::beam
