// SPDX-License-Identifier: Apache-2.0
//
// Corpus ingestion, vocabulary construction, tokenization, padding and
// masking, plus a synthetic structured-corpus generator for desk-scale
// experiments. Corpora are two aligned UTF-8 text files (one example per
// line); vocab files are one token per line with the four reserved tokens
// first.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "drgd/rng.hpp"

namespace drgd::data {

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kBosId = 2;
inline constexpr int kEosId = 3;
inline constexpr int kReservedCount = 4;

enum class TokenMode { kWord, kChar };

TokenMode token_mode_from_string(const std::string& name);
std::string to_string(TokenMode mode);

// Word mode: whitespace split, ASCII lowercased, digits masked to '#'.
// Char mode: one token per code point, whitespace dropped.
// Invalid UTF-8 is rejected with the byte offset.
std::vector<std::string> tokenize(const std::string& text, TokenMode mode);

class Vocab {
 public:
  Vocab();

  int add(const std::string& token);  // appends if unknown, returns id
  int id_of(const std::string& token) const;  // kUnkId when absent
  const std::string& token_of(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }

  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  std::vector<std::string> decode(const std::vector<int>& ids) const;

  void save(const std::string& path) const;
  static Vocab load(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

struct Example {
  std::vector<std::string> source;
  std::vector<std::string> target;
  int template_id = -1;  // synthetic corpora record their template here
};

struct ParallelCorpus {
  std::vector<Example> examples;

  std::size_t size() const { return examples.size(); }
};

// Most frequent tokens first (ties lexicographic), capped at max_size
// including the four reserved ids; tokens below min_count fall to UNK.
Vocab build_vocab(const std::vector<std::vector<std::string>>& sequences,
                  std::size_t max_size, std::size_t min_count = 1);

struct Batch {
  Eigen::MatrixXi source_ids;   // B x S, PAD beyond each row's length
  Eigen::MatrixXi target_ids;   // B x T, content plus EOS, then PAD
  std::vector<std::vector<std::uint8_t>> source_mask;  // B rows of S flags
  std::vector<std::vector<std::uint8_t>> target_mask;  // B rows of T flags

  Eigen::Index size() const { return source_ids.rows(); }
  std::size_t source_len(Eigen::Index row) const;
  std::size_t target_len(Eigen::Index row) const;
  std::vector<int> source_row(Eigen::Index row) const;  // unpadded
  std::vector<int> target_row(Eigen::Index row) const;  // unpadded, ends EOS
};

// Shuffles with the seed, sorts by source length inside windows of
// 20 * batch_size examples to limit padding waste, truncates sources to
// max_src_len and targets to max_tgt_len - 1 content tokens plus EOS.
std::vector<Batch> make_batches(const ParallelCorpus& corpus,
                                const Vocab& source_vocab,
                                const Vocab& target_vocab,
                                std::size_t batch_size,
                                std::size_t max_src_len,
                                std::size_t max_tgt_len, std::uint64_t seed);

// Templated (source, summary) pairs over small lexicons. Summaries follow
// one of three structures (subject-verb-object, bare noun phrase,
// subject-plus-event); sources are longer paraphrases with distractor
// clauses. Sources are unique within one corpus.
ParallelCorpus synth_corpus(std::size_t n_pairs, std::uint64_t seed);

// File helpers. Loading drops pairs where either side tokenizes to nothing
// and reports how many were dropped via the optional counter.
ParallelCorpus load_corpus(const std::string& source_path,
                           const std::string& target_path, TokenMode mode,
                           std::size_t* dropped = nullptr);
std::vector<std::string> read_lines(const std::string& path);
void write_lines(const std::string& path,
                 const std::vector<std::string>& lines);

}  // namespace drgd::data
