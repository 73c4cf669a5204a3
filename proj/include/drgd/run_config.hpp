// SPDX-License-Identifier: Apache-2.0
//
// Run settings shared by the CLI commands: a line-oriented key=value config
// file merged with command-line overrides. Every key is validated against
// the known schema; the fully resolved settings are echoed into the run
// directory so a run can be reproduced from its artifacts.

#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "drgd/model.hpp"
#include "drgd/train.hpp"

namespace drgd::cli {

struct Settings {
  std::string mode = "drgd";
  std::int64_t embed_dim = 300;
  std::int64_t hidden_dim = 500;
  std::int64_t latent_dim = 500;
  std::int64_t max_src_len = 100;
  std::int64_t max_tgt_len = 50;
  std::int64_t batch_size = 256;
  std::int64_t epochs = 10;
  double clip_norm = 5.0;
  std::uint64_t seed = 1;
  std::int64_t kl_warmup_steps = 0;
  std::int64_t validate_every = 1;
  std::int64_t patience = 5;
  double rho = 0.95;
  double adadelta_eps = 1e-6;
  std::int64_t beam_size = 10;
  std::string token_mode = "word";
  bool shared_vocab = false;
  std::string train_src, train_tgt, valid_src, valid_tgt;
  std::string vocab_src, vocab_tgt;
  std::string run_dir = "run";

  // Applies `key = value`; throws on unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  std::map<std::string, std::string> to_map() const;
  std::string resolved_text() const;  // sorted key = value lines

  ModelConfig model_config(Eigen::Index source_vocab,
                           Eigen::Index target_vocab) const;
  train::TrainConfig train_config() const;
};

// Parses a key=value file ('#' starts a comment, blank lines ignored) into
// the settings, in file order.
void load_config_file(Settings& settings, const std::string& path);

// DRGD_RUN_DIR, when set, overrides the configured run directory.
std::string effective_run_dir(const Settings& settings);

}  // namespace drgd::cli
