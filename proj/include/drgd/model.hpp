// SPDX-License-Identifier: Apache-2.0
//
// Model assembly: encoder, attentive deterministic decoder, and the
// recurrent variational module, combined into the output distribution and
// the training objective (reconstruction NLL plus per-step KL, averaged over
// the batch). StanD mode drops the latent channel and decodes from the
// deterministic state alone.

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "drgd/attention.hpp"
#include "drgd/data.hpp"
#include "drgd/encoder.hpp"
#include "drgd/latent.hpp"
#include "drgd/nn.hpp"

namespace drgd {

enum class DecoderMode { kDrgd, kStand };

DecoderMode decoder_mode_from_string(const std::string& name);
std::string to_string(DecoderMode mode);

struct ModelConfig {
  Eigen::Index embed_dim = 300;
  Eigen::Index hidden_dim = 500;
  Eigen::Index latent_dim = 500;
  Eigen::Index source_vocab = 0;
  Eigen::Index target_vocab = 0;
  std::size_t max_src_len = 100;
  std::size_t max_tgt_len = 50;
  DecoderMode mode = DecoderMode::kDrgd;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct OutputParams {
  nn::Param w_latent_out;  // hidden x latent, DRGD only
  nn::Param w_hidden_out;  // hidden x hidden
  nn::Param b_out;         // hidden x 1
  nn::Param w_vocab;       // target_vocab x hidden
  nn::Param b_vocab;       // target_vocab x 1

  OutputParams() = default;
  OutputParams(const ModelConfig& config, Rng& rng);

  std::vector<nn::Param*> params();
};

struct ModelParams {
  ModelConfig config;
  nn::EmbeddingTable source_embeddings;
  nn::EmbeddingTable target_embeddings;
  EncoderParams encoder;
  DecoderParams decoder;
  VariationalParams variational;  // left empty in StanD mode
  OutputParams output;

  ModelParams(const ModelConfig& config, std::uint64_t seed);

  // Fixed registration order; drives checkpoints, optimizer state, and
  // gradient walks.
  std::vector<nn::Param*> census();
  void zero_grads();
  std::size_t parameter_count();
  // name -> shape listing, one "name rows x cols" per line.
  std::string describe();
  // Global L2 norm of the accumulated gradients; the PAD embedding rows
  // never receive gradient and are excluded from the report.
  double grad_norm();
};

// DRGD: log softmax of W_vocab tanh(W_latent_out z + W_hidden_out h + b) +
// b_vocab. StanD: the z term is dropped; `z` may be a null Var.
ad::Var output_distribution(ad::Tape& tape, ModelParams& params, ad::Var h_layer2,
                            ad::Var z);

struct StepOutput {
  ad::Var log_probs;  // target_vocab x 1, exp sums to 1
  DecoderState state;
  LatentState latent;  // null Vars in StanD mode
  ad::Var attention;   // T x 1
};

// eps vector for (example, step); must be latent_dim x 1.
using NoiseFn =
    std::function<ad::Mat(std::size_t example, std::size_t step)>;

NoiseFn zero_noise(Eigen::Index latent_dim);
// Draws are made lazily in loop order, so a fixed seed fixes the noise.
NoiseFn gaussian_noise(Eigen::Index latent_dim, Rng& rng);

struct ExampleForward {
  ad::Var nll;  // summed over valid target steps
  ad::Var kl;   // summed over valid target steps (zero Var in StanD)
  std::size_t target_steps = 0;
  std::vector<StepOutput> steps;  // filled only when requested
};

// Teacher-forced forward of one example. `source` and `target` are unpadded
// id sequences; `target` ends with EOS and drives both the inputs (shifted,
// BOS first) and the per-step NLL.
ExampleForward forward_example(ad::Tape& tape, ModelParams& params,
                               const std::vector<int>& source,
                               const std::vector<int>& target,
                               const NoiseFn& noise, std::size_t example_index,
                               bool collect_steps = false);

struct BatchForward {
  ad::Var nll;   // batch-averaged (1/N), summed over time
  ad::Var kl;    // batch-averaged
  ad::Var loss;  // nll + kl
  std::size_t total_target_steps = 0;
  std::vector<std::vector<StepOutput>> steps;  // [example][step]
};

BatchForward forward_teacher_forced(ad::Tape& tape, ModelParams& params,
                                    const data::Batch& batch,
                                    const NoiseFn& noise,
                                    bool collect_steps = false);

// One decode step for search: consumes the previous token id and the carried
// states, returns the next-token distribution and updated states. With
// deterministic_z the latent sample is its mean; otherwise `eps` supplies
// the noise.
StepOutput step_inference(ad::Tape& tape, ModelParams& params,
                          const AttentionCache& cache, int y_prev_id,
                          const DecoderState& state,
                          const LatentState& latent_prev,
                          const EncoderOutput& enc, bool deterministic_z,
                          const ad::Mat* eps = nullptr);

// Initial decoder/latent states for decoding a freshly encoded source.
DecoderState initial_decoder(const EncoderOutput& enc);
LatentState initial_latent(ad::Tape& tape, const ModelConfig& config);

}  // namespace drgd
