// SPDX-License-Identifier: Apache-2.0
//
// ROUGE-1/2/L/SU4 scoring. F-measure uses the beta=1 harmonic mean
// throughout; multi-reference scoring keeps the reference that maximizes F
// (or recall, under the DUC-style recall mode). Corpus scores are
// macro-averages over examples.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drgd/data.hpp"

namespace drgd::rouge {

struct Score {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

using Tokens = std::vector<std::string>;

// Clipped n-gram overlap. Empty candidate scores (0,0,0); an empty reference
// list is an error.
Score rouge_n(const Tokens& candidate, const std::vector<Tokens>& references,
              std::size_t n);

// Longest-common-subsequence variant.
Score rouge_l(const Tokens& candidate, const std::vector<Tokens>& references);

// Unigrams plus ordered skip-bigrams whose positions are at most 4 apart.
Score rouge_su4(const Tokens& candidate,
                const std::vector<Tokens>& references);

enum class ScoreMode { kF, kRecall };

struct Options {
  ScoreMode mode = ScoreMode::kF;
  std::size_t byte_limit = 0;  // 0 disables candidate truncation
  data::TokenMode token_mode = data::TokenMode::kWord;
};

inline constexpr const char* kMetricNames[] = {"rouge-1", "rouge-2", "rouge-l",
                                               "rouge-su4"};
inline constexpr std::size_t kMetricCount = 4;

struct ExampleScores {
  Score metrics[kMetricCount];
};

struct Report {
  Options options;
  Score corpus[kMetricCount];  // macro-average of the per-example scores
  std::vector<ExampleScores> per_example;

  const Score& metric(const std::string& name) const;
  std::string table() const;  // aligned text: metric, P, R, F
  std::string tsv() const;    // machine-readable: metric\tP\tR\tF
};

// All four metrics for one candidate against its references.
ExampleScores score_example(const Tokens& candidate,
                            const std::vector<Tokens>& references,
                            ScoreMode mode = ScoreMode::kF);

// candidates[i] is scored against references[k][i] for every reference file
// k. Candidate lines are byte-truncated before tokenization when a limit is
// set.
Report score_corpus(const std::vector<std::string>& candidates,
                    const std::vector<std::vector<std::string>>& references,
                    const Options& options);

// Truncate to at most `limit` bytes without splitting a UTF-8 sequence.
std::string truncate_bytes(const std::string& line, std::size_t limit);

}  // namespace drgd::rouge
