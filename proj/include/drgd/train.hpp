// SPDX-License-Identifier: Apache-2.0
//
// Mini-batch training: Adadelta updates, global-norm gradient clipping,
// seeded shuffling, per-epoch validation NLL with deterministic latents,
// best-checkpoint retention, and the StanD-vs-DRGD ablation harness.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "drgd/data.hpp"
#include "drgd/model.hpp"
#include "drgd/rouge.hpp"

namespace drgd::train {

struct AdadeltaState {
  double rho = 0.95;
  double eps = 1e-6;
  std::vector<ad::Mat> sq_grad;   // E[g^2] per parameter
  std::vector<ad::Mat> sq_delta;  // E[dx^2] per parameter

  AdadeltaState() = default;
  AdadeltaState(const std::vector<nn::Param*>& params, double rho_ = 0.95,
                double eps_ = 1e-6);
};

// Standard recurrences, elementwise per parameter:
//   E[g^2]  <- rho E[g^2] + (1 - rho) g^2
//   dx       = -(sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps)) g
//   E[dx^2] <- rho E[dx^2] + (1 - rho) dx^2
//   x       <- x + dx
// Parameters with no accumulated gradient are treated as g = 0 (the
// accumulators still decay). Throws on non-finite gradients.
void adadelta_update(AdadeltaState& state,
                     const std::vector<nn::Param*>& params);

// Scales every gradient by clip_norm / norm when the global L2 norm exceeds
// clip_norm; returns the pre-clip norm.
double clip_gradients(const std::vector<nn::Param*>& params, double clip_norm);

bool gradients_finite(const std::vector<nn::Param*>& params);

struct TrainConfig {
  std::size_t batch_size = 256;
  std::size_t epochs = 10;
  double clip_norm = 5.0;
  std::uint64_t seed = 0;
  std::size_t kl_warmup_steps = 0;  // optimizer updates until weight 1; 0 = off
  std::size_t validate_every = 1;   // epochs between validations
  std::size_t patience = 5;         // validations without improvement; 0 = off
  double rho = 0.95;
  double adadelta_eps = 1e-6;
  std::string checkpoint_dir;       // empty disables checkpoint files
  bool learning_disabled = false;   // diagnostic: zero grads before updates
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_nll = 0.0;  // per target token
  double train_kl = 0.0;   // per target token
  double valid_nll = 0.0;  // per target token, deterministic latents
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochMetrics> epochs;
  double best_valid_nll = 0.0;
  std::size_t best_epoch = 0;
  std::size_t skipped_batches = 0;
  std::string best_checkpoint_path;
  std::string final_checkpoint_path;

  // Tab-separated, one line per epoch: epoch, train_nll, train_kl,
  // valid_nll, seconds.
  std::string metrics_tsv() const;
};

// Per-token teacher-forced NLL with deterministic latents (z = mu).
double validation_nll(ModelParams& params, const data::ParallelCorpus& corpus,
                      const data::Vocab& source_vocab,
                      const data::Vocab& target_vocab);

TrainReport train(ModelParams& params, const data::ParallelCorpus& train_corpus,
                  const data::ParallelCorpus& valid_corpus,
                  const data::Vocab& source_vocab,
                  const data::Vocab& target_vocab, const TrainConfig& config,
                  std::ostream* log = nullptr);

struct AblationRow {
  std::string system;
  double r1 = 0.0;
  double r2 = 0.0;
  double rl = 0.0;
};

struct AblationReport {
  std::vector<AblationRow> rows;  // StanD first, then DRGD

  std::string table() const;  // System | R-1 | R-2 | R-L
};

// Trains both decoder modes from the same seed and budget, decodes the
// validation split with each, and scores the decodes against the gold
// summaries.
AblationReport ablate(const data::ParallelCorpus& train_corpus,
                      const data::ParallelCorpus& valid_corpus,
                      const data::Vocab& source_vocab,
                      const data::Vocab& target_vocab,
                      const ModelConfig& base_config,
                      const TrainConfig& train_config, std::size_t beam_size,
                      std::ostream* log = nullptr);

// Greedy/beam decode of every example, detokenized join of the emitted
// tokens (EOS stripped).
std::vector<std::string> decode_corpus(ModelParams& params,
                                       const data::ParallelCorpus& corpus,
                                       const data::Vocab& source_vocab,
                                       const data::Vocab& target_vocab,
                                       std::size_t beam_size,
                                       std::size_t max_len,
                                       std::size_t workers = 1);

}  // namespace drgd::train
