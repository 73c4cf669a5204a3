// SPDX-License-Identifier: Apache-2.0

#include "drgd/train.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "drgd/beam.hpp"
#include "drgd/checkpoint.hpp"

namespace drgd::train {

AdadeltaState::AdadeltaState(const std::vector<nn::Param*>& params,
                             double rho_, double eps_)
    : rho(rho_), eps(eps_) {
  sq_grad.reserve(params.size());
  sq_delta.reserve(params.size());
  for (nn::Param* p : params) {
    sq_grad.push_back(ad::Mat::Zero(p->value().rows(), p->value().cols()));
    sq_delta.push_back(ad::Mat::Zero(p->value().rows(), p->value().cols()));
  }
}

void adadelta_update(AdadeltaState& state,
                     const std::vector<nn::Param*>& params) {
  if (state.sq_grad.size() != params.size()) {
    throw std::invalid_argument("adadelta: state tracks " +
                                std::to_string(state.sq_grad.size()) +
                                " parameters, got " +
                                std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    nn::Param* p = params[i];
    ad::Mat g = p->grad().size() == 0
                    ? ad::Mat::Zero(p->value().rows(), p->value().cols())
                    : p->grad();
    if (!g.allFinite()) {
      throw std::invalid_argument("adadelta: non-finite gradient for " +
                                  p->name);
    }
    ad::Mat& eg = state.sq_grad[i];
    ad::Mat& ed = state.sq_delta[i];
    eg = state.rho * eg + (1.0 - state.rho) * g.cwiseProduct(g);
    const ad::Mat delta =
        -((ed.array() + state.eps).sqrt() / (eg.array() + state.eps).sqrt() *
          g.array())
             .matrix();
    ed = state.rho * ed + (1.0 - state.rho) * delta.cwiseProduct(delta);
    p->value() += delta;
  }
}

double clip_gradients(const std::vector<nn::Param*>& params,
                      double clip_norm) {
  if (clip_norm <= 0.0) {
    throw std::invalid_argument("clip_gradients: clip_norm must be > 0");
  }
  double sq = 0.0;
  for (nn::Param* p : params) {
    if (p->grad().size() != 0) {
      sq += p->grad().squaredNorm();
    }
  }
  const double norm = std::sqrt(sq);
  if (norm > clip_norm) {
    const double scale = clip_norm / norm;
    for (nn::Param* p : params) {
      if (p->grad().size() != 0) {
        p->grad() *= scale;
      }
    }
  }
  return norm;
}

bool gradients_finite(const std::vector<nn::Param*>& params) {
  for (nn::Param* p : params) {
    if (p->grad().size() != 0 && !p->grad().allFinite()) {
      return false;
    }
  }
  return true;
}

double validation_nll(ModelParams& params, const data::ParallelCorpus& corpus,
                      const data::Vocab& source_vocab,
                      const data::Vocab& target_vocab) {
  if (corpus.size() == 0) {
    throw std::invalid_argument("validation_nll: empty corpus");
  }
  const NoiseFn noise = zero_noise(params.config.latent_dim);
  double nll_sum = 0.0;
  std::size_t steps = 0;
  for (const data::Example& ex : corpus.examples) {
    std::vector<int> src = source_vocab.encode(ex.source);
    if (src.size() > params.config.max_src_len) {
      src.resize(params.config.max_src_len);
    }
    std::vector<int> tgt = target_vocab.encode(ex.target);
    if (tgt.size() > params.config.max_tgt_len - 1) {
      tgt.resize(params.config.max_tgt_len - 1);
    }
    tgt.push_back(data::kEosId);
    ad::Tape tape;
    ExampleForward fw = forward_example(tape, params, src, tgt, noise, 0);
    nll_sum += fw.nll.value()(0, 0);
    steps += fw.target_steps;
  }
  return nll_sum / static_cast<double>(steps);
}

namespace {

// Shortest representation that round-trips the exact double.
std::string format_double(double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

}  // namespace

std::string TrainReport::metrics_tsv() const {
  std::ostringstream out;
  for (const EpochMetrics& m : epochs) {
    out << m.epoch << '\t' << format_double(m.train_nll) << '\t'
        << format_double(m.train_kl) << '\t' << format_double(m.valid_nll)
        << '\t' << std::fixed << std::setprecision(3) << m.seconds
        << std::defaultfloat << '\n';
  }
  return out.str();
}

TrainReport train(ModelParams& params,
                  const data::ParallelCorpus& train_corpus,
                  const data::ParallelCorpus& valid_corpus,
                  const data::Vocab& source_vocab,
                  const data::Vocab& target_vocab, const TrainConfig& config,
                  std::ostream* log) {
  if (train_corpus.size() == 0) {
    throw std::invalid_argument("train: empty corpus");
  }
  if (config.batch_size < 1) {
    throw std::invalid_argument("train: batch_size must be >= 1");
  }
  const bool drgd = params.config.mode == DecoderMode::kDrgd;
  std::vector<nn::Param*> census = params.census();
  AdadeltaState opt(census, config.rho, config.adadelta_eps);
  Rng noise_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  const NoiseFn noise = drgd ? gaussian_noise(params.config.latent_dim,
                                              noise_rng)
                             : zero_noise(params.config.latent_dim);

  if (!config.checkpoint_dir.empty()) {
    std::filesystem::create_directories(config.checkpoint_dir);
  }

  TrainReport report;
  double best_valid = std::numeric_limits<double>::infinity();
  double last_valid = std::numeric_limits<double>::quiet_NaN();
  std::size_t updates = 0;
  std::size_t stale_validations = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    std::vector<data::Batch> batches = data::make_batches(
        train_corpus, source_vocab, target_vocab, config.batch_size,
        params.config.max_src_len, params.config.max_tgt_len,
        config.seed + epoch);
    double nll_sum = 0.0;
    double kl_sum = 0.0;
    std::size_t step_count = 0;

    for (const data::Batch& batch : batches) {
      params.zero_grads();
      const double kl_weight =
          config.kl_warmup_steps == 0
              ? 1.0
              : std::min(1.0, static_cast<double>(updates + 1) /
                                  static_cast<double>(config.kl_warmup_steps));
      bool batch_ok = true;
      for (Eigen::Index n = 0; n < batch.size() && batch_ok; ++n) {
        ad::Tape tape;
        ExampleForward fw = forward_example(
            tape, params, batch.source_row(n), batch.target_row(n), noise,
            static_cast<std::size_t>(n));
        ad::Var loss =
            drgd ? tape.add(fw.nll, tape.scale(fw.kl, kl_weight)) : fw.nll;
        if (!std::isfinite(loss.value()(0, 0))) {
          batch_ok = false;
          break;
        }
        tape.backward(loss);
        nll_sum += fw.nll.value()(0, 0);
        kl_sum += drgd ? fw.kl.value()(0, 0) : 0.0;
        step_count += fw.target_steps;
      }
      if (batch_ok) {
        const double inv = 1.0 / static_cast<double>(batch.size());
        for (nn::Param* p : census) {
          if (p->grad().size() != 0) {
            p->grad() *= inv;
          }
        }
        clip_gradients(census, config.clip_norm);
        batch_ok = gradients_finite(census);
      }
      if (!batch_ok) {
        ++report.skipped_batches;
        if (log != nullptr) {
          *log << "skipping batch with non-finite loss/gradients (total "
               << report.skipped_batches << ")\n";
        }
        continue;
      }
      if (config.learning_disabled) {
        for (nn::Param* p : census) {
          p->zero_grad();
        }
      }
      adadelta_update(opt, census);
      ++updates;
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.train_nll = step_count > 0 ? nll_sum / static_cast<double>(step_count)
                                 : 0.0;
    m.train_kl =
        step_count > 0 ? kl_sum / static_cast<double>(step_count) : 0.0;

    const bool do_validate =
        valid_corpus.size() > 0 &&
        (epoch % std::max<std::size_t>(1, config.validate_every) == 0 ||
         epoch == config.epochs);
    if (do_validate) {
      last_valid =
          validation_nll(params, valid_corpus, source_vocab, target_vocab);
      if (last_valid < best_valid) {
        best_valid = last_valid;
        report.best_epoch = epoch;
        stale_validations = 0;
        if (!config.checkpoint_dir.empty()) {
          report.best_checkpoint_path =
              (std::filesystem::path(config.checkpoint_dir) / "best.drgd")
                  .string();
          save_checkpoint(report.best_checkpoint_path, params);
        }
      } else {
        ++stale_validations;
      }
    }
    m.valid_nll = last_valid;
    m.seconds = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - epoch_start)
                    .count();
    report.epochs.push_back(m);
    if (log != nullptr) {
      *log << "epoch " << m.epoch << " train_nll " << m.train_nll
           << " train_kl " << m.train_kl << " valid_nll " << m.valid_nll
           << " (" << std::fixed << std::setprecision(2) << m.seconds
           << std::defaultfloat << "s)\n";
    }
    if (config.patience > 0 && stale_validations >= config.patience) {
      if (log != nullptr) {
        *log << "early stop: no validation improvement in " << config.patience
             << " validations\n";
      }
      break;
    }
  }

  report.best_valid_nll = best_valid;
  if (!config.checkpoint_dir.empty()) {
    report.final_checkpoint_path =
        (std::filesystem::path(config.checkpoint_dir) / "final.drgd").string();
    save_checkpoint(report.final_checkpoint_path, params);
    if (report.best_checkpoint_path.empty()) {
      report.best_checkpoint_path = report.final_checkpoint_path;
    }
  }
  return report;
}

std::vector<std::string> decode_corpus(ModelParams& params,
                                       const data::ParallelCorpus& corpus,
                                       const data::Vocab& source_vocab,
                                       const data::Vocab& target_vocab,
                                       std::size_t beam_size,
                                       std::size_t max_len,
                                       std::size_t workers) {
  std::vector<std::string> out(corpus.size());
  const std::size_t n_workers =
      std::max<std::size_t>(1, std::min(workers, corpus.size()));
  auto decode_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      std::vector<int> src = source_vocab.encode(corpus.examples[i].source);
      if (src.size() > params.config.max_src_len) {
        src.resize(params.config.max_src_len);
      }
      auto results = beam::decode_source(params, src, beam_size, max_len);
      std::vector<std::string> tokens;
      if (!results.empty()) {
        for (int id : results.front().tokens) {
          if (id == data::kEosId) {
            break;
          }
          tokens.push_back(target_vocab.token_of(id));
        }
      }
      std::string line;
      for (const std::string& t : tokens) {
        if (!line.empty()) {
          line += ' ';
        }
        line += t;
      }
      out[i] = std::move(line);
    }
  };
  if (n_workers == 1) {
    decode_range(0, corpus.size());
  } else {
    // Static contiguous split; parameters are read-only during decoding and
    // results land at their example index, so output order is deterministic.
    std::vector<std::thread> pool;
    const std::size_t chunk =
        (corpus.size() + n_workers - 1) / n_workers;
    for (std::size_t w = 0; w < n_workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(begin + chunk, corpus.size());
      if (begin < end) {
        pool.emplace_back(decode_range, begin, end);
      }
    }
    for (std::thread& th : pool) {
      th.join();
    }
  }
  return out;
}

std::string AblationReport::table() const {
  std::ostringstream out;
  out << std::left << std::setw(8) << "System" << std::right << std::setw(9)
      << "R-1" << std::setw(9) << "R-2" << std::setw(9) << "R-L" << '\n';
  out << std::fixed << std::setprecision(4);
  for (const AblationRow& row : rows) {
    out << std::left << std::setw(8) << row.system << std::right
        << std::setw(9) << row.r1 << std::setw(9) << row.r2 << std::setw(9)
        << row.rl << '\n';
  }
  return out.str();
}

AblationReport ablate(const data::ParallelCorpus& train_corpus,
                      const data::ParallelCorpus& valid_corpus,
                      const data::Vocab& source_vocab,
                      const data::Vocab& target_vocab,
                      const ModelConfig& base_config,
                      const TrainConfig& train_config, std::size_t beam_size,
                      std::ostream* log) {
  if (valid_corpus.size() == 0) {
    throw std::invalid_argument("ablate: empty validation corpus");
  }
  AblationReport report;
  for (DecoderMode mode : {DecoderMode::kStand, DecoderMode::kDrgd}) {
    ModelConfig config = base_config;
    config.mode = mode;
    ModelParams params(config, train_config.seed);
    if (log != nullptr) {
      *log << "ablate: training " << to_string(mode) << '\n';
    }
    TrainConfig tc = train_config;
    tc.checkpoint_dir.clear();  // the comparison does not keep checkpoints
    train(params, train_corpus, valid_corpus, source_vocab, target_vocab, tc,
          log);
    const std::vector<std::string> decoded =
        decode_corpus(params, valid_corpus, source_vocab, target_vocab,
                      beam_size, config.max_tgt_len);
    std::vector<std::string> references;
    references.reserve(valid_corpus.size());
    for (const data::Example& ex : valid_corpus.examples) {
      std::string line;
      for (const std::string& t : ex.target) {
        if (!line.empty()) {
          line += ' ';
        }
        line += t;
      }
      references.push_back(std::move(line));
    }
    rouge::Options options;
    rouge::Report scores = rouge::score_corpus(decoded, {references}, options);
    AblationRow row;
    row.system = mode == DecoderMode::kStand ? "StanD" : "DRGD";
    row.r1 = scores.metric("rouge-1").f;
    row.r2 = scores.metric("rouge-2").f;
    row.rl = scores.metric("rouge-l").f;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace drgd::train
