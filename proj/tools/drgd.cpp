// SPDX-License-Identifier: Apache-2.0
//
// Single drgd executable: corpus synthesis, vocabulary building, training,
// beam-search decoding, ROUGE scoring, and the StanD-vs-DRGD ablation.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "drgd/beam.hpp"
#include "drgd/checkpoint.hpp"
#include "drgd/data.hpp"
#include "drgd/model.hpp"
#include "drgd/rouge.hpp"
#include "drgd/run_config.hpp"
#include "drgd/train.hpp"

namespace fs = std::filesystem;
using namespace drgd;

namespace {

// Settings flags shared by train and ablate. Values are kept as strings and
// funneled through Settings::set so the config file and the command line
// validate identically.
struct SettingsFlags {
  std::string config_path;
  std::vector<std::pair<std::string, CLI::Option*>> options;
  std::vector<std::string> values;
  bool char_mode = false;
  CLI::Option* char_opt = nullptr;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path,
                    "key = value config file applied before other flags");
    static const std::vector<std::pair<std::string, std::string>> keys = {
        {"mode", "decoder mode: drgd or stand"},
        {"embed-dim", "word embedding dimension"},
        {"hidden-dim", "hidden state dimension"},
        {"latent-dim", "latent variable dimension"},
        {"max-src-len", "maximum source length"},
        {"max-tgt-len", "maximum target length (EOS included)"},
        {"batch-size", "mini-batch size"},
        {"epochs", "training epochs"},
        {"clip-norm", "global gradient-norm clip"},
        {"seed", "master seed"},
        {"kl-warmup-steps", "updates to ramp the KL weight; 0 disables"},
        {"validate-every", "epochs between validations"},
        {"patience", "validations without improvement before stopping; 0 disables"},
        {"rho", "Adadelta decay"},
        {"adadelta-eps", "Adadelta stabilizer"},
        {"beam-size", "beam width for decoding"},
        {"shared-vocab", "use the source vocab for both sides (true/false)"},
        {"train-src", "training source file"},
        {"train-tgt", "training target file"},
        {"valid-src", "validation source file"},
        {"valid-tgt", "validation target file"},
        {"vocab-src", "source vocabulary file"},
        {"vocab-tgt", "target vocabulary file"},
        {"run-dir", "output directory (DRGD_RUN_DIR overrides)"},
    };
    values.resize(keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i) {
      options.emplace_back(
          keys[i].first,
          cmd->add_option("--" + keys[i].first, values[i], keys[i].second));
    }
    char_opt = cmd->add_flag("--char", char_mode,
                             "character-level tokenization");
  }

  cli::Settings resolve() const {
    cli::Settings s;
    if (!config_path.empty()) {
      cli::load_config_file(s, config_path);
    }
    for (std::size_t i = 0; i < options.size(); ++i) {
      if (options[i].second->count() > 0) {
        std::string key = options[i].first;
        for (char& c : key) {
          if (c == '-') {
            c = '_';
          }
        }
        s.set(key, values[i]);
      }
    }
    if (char_opt->count() > 0 && char_mode) {
      s.set("token_mode", "char");
    }
    return s;
  }
};

std::string join_tokens(const std::vector<std::string>& tokens,
                        data::TokenMode mode) {
  std::string out;
  for (const std::string& t : tokens) {
    if (!out.empty() && mode == data::TokenMode::kWord) {
      out += ' ';
    }
    out += t;
  }
  return out;
}

struct LoadedData {
  data::Vocab source_vocab;
  data::Vocab target_vocab;
  data::ParallelCorpus train;
  data::ParallelCorpus valid;
};

LoadedData load_training_data(const cli::Settings& s) {
  LoadedData d;
  if (s.vocab_src.empty()) {
    throw std::runtime_error("missing vocab_src (path to the source vocabulary)");
  }
  d.source_vocab = data::Vocab::load(s.vocab_src);
  if (s.shared_vocab) {
    d.target_vocab = d.source_vocab;
  } else {
    if (s.vocab_tgt.empty()) {
      throw std::runtime_error(
          "missing vocab_tgt (path to the target vocabulary)");
    }
    d.target_vocab = data::Vocab::load(s.vocab_tgt);
  }
  if (s.train_src.empty() || s.train_tgt.empty()) {
    throw std::runtime_error("missing train_src/train_tgt corpus paths");
  }
  const data::TokenMode mode = data::token_mode_from_string(s.token_mode);
  std::size_t dropped = 0;
  d.train = data::load_corpus(s.train_src, s.train_tgt, mode, &dropped);
  if (dropped > 0) {
    std::cerr << "dropped " << dropped << " empty-sided training pairs\n";
  }
  if (!s.valid_src.empty() || !s.valid_tgt.empty()) {
    if (s.valid_src.empty() || s.valid_tgt.empty()) {
      throw std::runtime_error("valid_src and valid_tgt must be given together");
    }
    d.valid = data::load_corpus(s.valid_src, s.valid_tgt, mode, &dropped);
  } else {
    d.valid = d.train;  // validation defaults to the training set
  }
  return d;
}

fs::path prepare_run_dir(const cli::Settings& s) {
  const fs::path run_dir = cli::effective_run_dir(s);
  fs::create_directories(run_dir);
  fs::create_directories(run_dir / "checkpoints");
  fs::create_directories(run_dir / "decodes");
  std::ofstream resolved(run_dir / "config.resolved");
  resolved << s.resolved_text();
  return run_dir;
}

int cmd_train(const SettingsFlags& flags) {
  const cli::Settings s = flags.resolve();
  const fs::path run_dir = prepare_run_dir(s);
  LoadedData d = load_training_data(s);

  ModelConfig mc = s.model_config(d.source_vocab.size(),
                                  d.target_vocab.size());
  ModelParams params(mc, s.seed);
  std::cerr << to_string(mc.mode) << " model with "
            << params.parameter_count() << " parameters\n";

  train::TrainConfig tc = s.train_config();
  tc.checkpoint_dir = (run_dir / "checkpoints").string();
  const train::TrainReport report =
      train::train(params, d.train, d.valid, d.source_vocab, d.target_vocab,
                   tc, &std::cerr);

  std::ofstream metrics(run_dir / "metrics.tsv");
  metrics << report.metrics_tsv();
  std::cout << "best valid_nll " << report.best_valid_nll << " at epoch "
            << report.best_epoch << "\ncheckpoint "
            << report.best_checkpoint_path << '\n';
  return 0;
}

int cmd_ablate(const SettingsFlags& flags) {
  const cli::Settings s = flags.resolve();
  const fs::path run_dir = prepare_run_dir(s);
  LoadedData d = load_training_data(s);

  const ModelConfig mc = s.model_config(d.source_vocab.size(),
                                        d.target_vocab.size());
  const train::AblationReport report = train::ablate(
      d.train, d.valid, d.source_vocab, d.target_vocab, mc, s.train_config(),
      static_cast<std::size_t>(s.beam_size), &std::cerr);
  const std::string table = report.table();
  std::ofstream out(run_dir / "ablation.txt");
  out << table;
  std::cout << table;
  return 0;
}

int cmd_synth(std::size_t n, std::uint64_t seed, const std::string& out_src,
              const std::string& out_tgt, const std::string& out_meta) {
  const data::ParallelCorpus corpus = data::synth_corpus(n, seed);
  std::vector<std::string> src, tgt, meta;
  for (const data::Example& ex : corpus.examples) {
    src.push_back(join_tokens(ex.source, data::TokenMode::kWord));
    tgt.push_back(join_tokens(ex.target, data::TokenMode::kWord));
    meta.push_back(std::to_string(ex.template_id));
  }
  data::write_lines(out_src, src);
  data::write_lines(out_tgt, tgt);
  if (!out_meta.empty()) {
    data::write_lines(out_meta, meta);
  }
  std::cout << "wrote " << corpus.size() << " pairs\n";
  return 0;
}

int cmd_vocab(const std::vector<std::string>& inputs, const std::string& out,
              std::size_t max_size, std::size_t min_count, bool char_mode) {
  const data::TokenMode mode =
      char_mode ? data::TokenMode::kChar : data::TokenMode::kWord;
  std::vector<std::vector<std::string>> sequences;
  for (const std::string& path : inputs) {
    for (const std::string& line : data::read_lines(path)) {
      sequences.push_back(data::tokenize(line, mode));
    }
  }
  const data::Vocab vocab = data::build_vocab(sequences, max_size, min_count);
  vocab.save(out);
  std::cout << "wrote " << vocab.size() << " tokens to " << out << '\n';
  return 0;
}

int cmd_decode(const std::string& checkpoint, const std::string& input,
               const std::string& output, const std::string& vocab_src_path,
               const std::string& vocab_tgt_path, bool shared_vocab,
               std::size_t beam_size, std::size_t max_len, bool sample_z,
               std::uint64_t seed, std::size_t workers, bool char_mode,
               const std::string& scores_path, double length_penalty) {
  ModelParams params = load_checkpoint(checkpoint);
  const data::Vocab source_vocab = data::Vocab::load(vocab_src_path);
  const data::Vocab target_vocab =
      shared_vocab ? source_vocab : data::Vocab::load(vocab_tgt_path);
  if (source_vocab.size() != params.config.source_vocab ||
      target_vocab.size() != params.config.target_vocab) {
    throw std::runtime_error(
        "vocabulary/checkpoint mismatch: vocab files have " +
        std::to_string(source_vocab.size()) + "/" +
        std::to_string(target_vocab.size()) +
        " tokens but the checkpoint was built for " +
        std::to_string(params.config.source_vocab) + "/" +
        std::to_string(params.config.target_vocab));
  }
  const data::TokenMode mode =
      char_mode ? data::TokenMode::kChar : data::TokenMode::kWord;
  const std::vector<std::string> lines = data::read_lines(input);
  const std::size_t n = lines.size();
  if (max_len == 0) {
    max_len = params.config.max_tgt_len;
  }

  std::vector<std::string> decoded(n);
  std::vector<double> scores(n, 0.0);
  // Sampling consumes one seeded stream per line so worker count does not
  // change the outputs.
  auto decode_one = [&](std::size_t i) {
    std::vector<int> src =
        source_vocab.encode(data::tokenize(lines[i], mode));
    if (src.empty()) {
      decoded[i].clear();
      return;
    }
    if (src.size() > params.config.max_src_len) {
      src.resize(params.config.max_src_len);
    }
    Rng rng(seed + i);
    const auto results = beam::decode_source(params, src, beam_size, max_len,
                                             !sample_z, &rng, length_penalty);
    std::vector<std::string> tokens;
    if (!results.empty()) {
      scores[i] = results.front().log_prob;
      for (int id : results.front().tokens) {
        if (id == data::kEosId) {
          break;
        }
        tokens.push_back(target_vocab.token_of(id));
      }
    }
    decoded[i] = join_tokens(tokens, mode);
  };
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      decode_one(i);
    }
  } else {
    std::vector<std::thread> pool;
    const std::size_t n_workers = std::min(workers, std::max<std::size_t>(n, 1));
    const std::size_t chunk = (n + n_workers - 1) / n_workers;
    for (std::size_t w = 0; w < n_workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(begin + chunk, n);
      if (begin < end) {
        pool.emplace_back([&, begin, end] {
          for (std::size_t i = begin; i < end; ++i) {
            decode_one(i);
          }
        });
      }
    }
    for (std::thread& th : pool) {
      th.join();
    }
  }
  data::write_lines(output, decoded);
  if (!scores_path.empty()) {
    std::vector<std::string> score_lines;
    for (double sc : scores) {
      std::ostringstream os;
      os.precision(17);
      os << sc;
      score_lines.push_back(os.str());
    }
    data::write_lines(scores_path, score_lines);
  }
  std::cout << "decoded " << n << " lines to " << output << '\n';
  return 0;
}

int cmd_score(const std::string& cand, const std::vector<std::string>& refs,
              const std::string& mode, std::size_t byte_limit, bool char_mode,
              const std::string& out_path) {
  rouge::Options options;
  if (mode == "f") {
    options.mode = rouge::ScoreMode::kF;
  } else if (mode == "recall") {
    options.mode = rouge::ScoreMode::kRecall;
  } else {
    throw std::runtime_error("score: --mode must be f or recall");
  }
  options.byte_limit = byte_limit;
  options.token_mode =
      char_mode ? data::TokenMode::kChar : data::TokenMode::kWord;
  std::vector<std::vector<std::string>> ref_lines;
  for (const std::string& path : refs) {
    ref_lines.push_back(data::read_lines(path));
  }
  const rouge::Report report =
      rouge::score_corpus(data::read_lines(cand), ref_lines, options);
  std::cout << report.table();
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    out << report.tsv();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deep recurrent generative decoder toolkit"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  std::size_t synth_n = 100;
  std::uint64_t synth_seed = 1;
  std::string synth_src = "synth.src", synth_tgt = "synth.tgt", synth_meta;
  synth->add_option("--n", synth_n, "number of pairs");
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--out-src", synth_src, "source output file");
  synth->add_option("--out-tgt", synth_tgt, "target output file");
  synth->add_option("--out-meta", synth_meta, "template-id side file");

  // vocab
  auto* vocab = app.add_subcommand("vocab", "build a vocabulary file");
  std::vector<std::string> vocab_inputs;
  std::string vocab_out = "vocab.txt";
  std::size_t vocab_max = 10000, vocab_min_count = 1;
  bool vocab_char = false;
  vocab->add_option("--src", vocab_inputs, "input text files")->required();
  vocab->add_option("--out", vocab_out, "output vocabulary file");
  vocab->add_option("--max-size", vocab_max,
                    "maximum vocabulary size (reserved tokens included)");
  vocab->add_option("--min-count", vocab_min_count, "minimum token count");
  vocab->add_flag("--char", vocab_char, "character-level tokenization");

  // train / ablate
  auto* train_cmd = app.add_subcommand("train", "train a model");
  SettingsFlags train_flags;
  train_flags.attach(train_cmd);
  auto* ablate_cmd =
      app.add_subcommand("ablate", "train StanD and DRGD, compare with ROUGE");
  SettingsFlags ablate_flags;
  ablate_flags.attach(ablate_cmd);

  // decode
  auto* decode = app.add_subcommand("decode", "beam-search decode a file");
  std::string dec_ckpt, dec_in, dec_out = "decodes.txt";
  std::string dec_vocab_src, dec_vocab_tgt, dec_scores;
  std::size_t dec_beam = 10, dec_max_len = 0, dec_workers = 1;
  bool dec_sample_z = false, dec_char = false, dec_shared_vocab = false;
  std::uint64_t dec_seed = 1;
  double dec_length_penalty = 0.0;
  decode->add_option("--checkpoint", dec_ckpt, "model checkpoint")->required();
  decode->add_option("--input", dec_in, "source text file")->required();
  decode->add_option("--output", dec_out, "summary output file");
  decode->add_option("--vocab-src", dec_vocab_src, "source vocabulary")
      ->required();
  decode->add_option("--vocab-tgt", dec_vocab_tgt, "target vocabulary");
  decode->add_flag("--shared-vocab", dec_shared_vocab,
                   "use the source vocab for both sides");
  decode->add_option("--beam", dec_beam, "beam size");
  decode->add_option("--max-len", dec_max_len,
                     "decode length cap (0 = checkpoint max_tgt_len)");
  decode->add_flag("--sample-z", dec_sample_z,
                   "sample the latent variable instead of using its mean");
  decode->add_option("--seed", dec_seed, "noise seed for --sample-z");
  decode->add_option("--workers", dec_workers, "parallel decode workers");
  decode->add_flag("--char", dec_char, "character-level tokenization");
  decode->add_option("--scores", dec_scores, "side file with log-probs");
  decode->add_option("--length-penalty", dec_length_penalty,
                     "rank hypotheses by score / length^alpha (0 = off)");

  // score
  auto* score = app.add_subcommand("score", "ROUGE-score a decode file");
  std::string score_cand, score_mode = "f", score_out;
  std::vector<std::string> score_refs;
  std::size_t score_bytes = 0;
  bool score_char = false;
  score->add_option("--cand", score_cand, "candidate file")->required();
  score->add_option("--ref", score_refs, "reference file(s)")->required();
  score->add_option("--mode", score_mode, "f or recall");
  score->add_option("--byte-limit", score_bytes,
                    "truncate candidates to this many bytes (0 = off)");
  score->add_flag("--char", score_char, "character-level tokenization");
  score->add_option("--out", score_out, "machine-readable TSV output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      return cmd_synth(synth_n, synth_seed, synth_src, synth_tgt, synth_meta);
    }
    if (vocab->parsed()) {
      return cmd_vocab(vocab_inputs, vocab_out, vocab_max, vocab_min_count,
                       vocab_char);
    }
    if (train_cmd->parsed()) {
      return cmd_train(train_flags);
    }
    if (ablate_cmd->parsed()) {
      return cmd_ablate(ablate_flags);
    }
    if (decode->parsed()) {
      if (!dec_shared_vocab && dec_vocab_tgt.empty()) {
        throw std::runtime_error(
            "decode: need --vocab-tgt or --shared-vocab");
      }
      return cmd_decode(dec_ckpt, dec_in, dec_out, dec_vocab_src,
                        dec_vocab_tgt, dec_shared_vocab, dec_beam, dec_max_len,
                        dec_sample_z, dec_seed, dec_workers, dec_char,
                        dec_scores, dec_length_penalty);
    }
    if (score->parsed()) {
      return cmd_score(score_cand, score_refs, score_mode, score_bytes,
                       score_char, score_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
