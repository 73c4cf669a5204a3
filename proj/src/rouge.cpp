// SPDX-License-Identifier: Apache-2.0

#include "drgd/rouge.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace drgd::rouge {

namespace {

double f_beta1(double p, double r) {
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

using CountMap = std::unordered_map<std::string, std::size_t>;

CountMap ngram_counts(const Tokens& tokens, std::size_t n) {
  CountMap counts;
  if (tokens.size() >= n) {
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      std::string key;
      for (std::size_t k = 0; k < n; ++k) {
        key += tokens[i + k];
        key += '\x1f';
      }
      ++counts[key];
    }
  }
  return counts;
}

// Unigrams plus skip-bigrams with positions at most 4 apart (adjacent pairs
// count; this includes the plain bigrams).
CountMap su4_counts(const Tokens& tokens) {
  CountMap counts;
  for (const std::string& t : tokens) {
    ++counts[t + '\x1f'];
  }
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    for (std::size_t j = i + 1; j < tokens.size() && j - i <= 4; ++j) {
      ++counts[tokens[i] + '\x1f' + tokens[j] + '\x1f' + '\x1f'];
    }
  }
  return counts;
}

std::size_t total(const CountMap& counts) {
  std::size_t n = 0;
  for (const auto& [key, c] : counts) {
    n += c;
  }
  return n;
}

std::size_t clipped_overlap(const CountMap& cand, const CountMap& ref) {
  std::size_t overlap = 0;
  for (const auto& [key, c] : cand) {
    auto it = ref.find(key);
    if (it != ref.end()) {
      overlap += std::min(c, it->second);
    }
  }
  return overlap;
}

Score from_counts(std::size_t overlap, std::size_t cand_total,
                  std::size_t ref_total) {
  Score s;
  s.precision = cand_total > 0 ? static_cast<double>(overlap) /
                                     static_cast<double>(cand_total)
                               : 0.0;
  s.recall = ref_total > 0 ? static_cast<double>(overlap) /
                                 static_cast<double>(ref_total)
                           : 0.0;
  s.f = f_beta1(s.precision, s.recall);
  return s;
}

// Keeps the reference with the largest F (or recall in recall mode).
template <class PerRef>
Score best_over_references(const std::vector<Tokens>& references,
                           ScoreMode mode, const PerRef& score_one) {
  if (references.empty()) {
    throw std::invalid_argument("rouge: no references given");
  }
  Score best;
  bool first = true;
  for (const Tokens& ref : references) {
    const Score s = score_one(ref);
    const double key = mode == ScoreMode::kF ? s.f : s.recall;
    const double best_key = mode == ScoreMode::kF ? best.f : best.recall;
    if (first || key > best_key) {
      best = s;
      first = false;
    }
  }
  return best;
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  if (a.empty() || b.empty()) {
    return 0;
  }
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1
                                    : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

Score score_n_mode(const Tokens& candidate,
                   const std::vector<Tokens>& references, std::size_t n,
                   ScoreMode mode) {
  if (references.empty()) {
    throw std::invalid_argument("rouge: no references given");
  }
  if (candidate.empty()) {
    return Score{};
  }
  const CountMap cand = ngram_counts(candidate, n);
  const std::size_t cand_total = total(cand);
  return best_over_references(references, mode, [&](const Tokens& ref) {
    const CountMap rc = ngram_counts(ref, n);
    return from_counts(clipped_overlap(cand, rc), cand_total, total(rc));
  });
}

Score score_l_mode(const Tokens& candidate,
                   const std::vector<Tokens>& references, ScoreMode mode) {
  if (references.empty()) {
    throw std::invalid_argument("rouge: no references given");
  }
  if (candidate.empty()) {
    return Score{};
  }
  return best_over_references(references, mode, [&](const Tokens& ref) {
    const std::size_t lcs = lcs_length(candidate, ref);
    return from_counts(lcs, candidate.size(), ref.size());
  });
}

Score score_su4_mode(const Tokens& candidate,
                     const std::vector<Tokens>& references, ScoreMode mode) {
  if (references.empty()) {
    throw std::invalid_argument("rouge: no references given");
  }
  if (candidate.empty()) {
    return Score{};
  }
  const CountMap cand = su4_counts(candidate);
  const std::size_t cand_total = total(cand);
  return best_over_references(references, mode, [&](const Tokens& ref) {
    const CountMap rc = su4_counts(ref);
    return from_counts(clipped_overlap(cand, rc), cand_total, total(rc));
  });
}

}  // namespace

Score rouge_n(const Tokens& candidate, const std::vector<Tokens>& references,
              std::size_t n) {
  if (n < 1) {
    throw std::invalid_argument("rouge_n: n must be >= 1");
  }
  return score_n_mode(candidate, references, n, ScoreMode::kF);
}

Score rouge_l(const Tokens& candidate, const std::vector<Tokens>& references) {
  return score_l_mode(candidate, references, ScoreMode::kF);
}

Score rouge_su4(const Tokens& candidate,
                const std::vector<Tokens>& references) {
  return score_su4_mode(candidate, references, ScoreMode::kF);
}

ExampleScores score_example(const Tokens& candidate,
                            const std::vector<Tokens>& references,
                            ScoreMode mode) {
  ExampleScores out;
  out.metrics[0] = score_n_mode(candidate, references, 1, mode);
  out.metrics[1] = score_n_mode(candidate, references, 2, mode);
  out.metrics[2] = score_l_mode(candidate, references, mode);
  out.metrics[3] = score_su4_mode(candidate, references, mode);
  return out;
}

std::string truncate_bytes(const std::string& line, std::size_t limit) {
  if (limit == 0 || line.size() <= limit) {
    return line;
  }
  std::size_t end = limit;
  // Back off over UTF-8 continuation bytes so no sequence is split.
  while (end > 0 &&
         (static_cast<unsigned char>(line[end]) & 0xC0) == 0x80) {
    --end;
  }
  return line.substr(0, end);
}

const Score& Report::metric(const std::string& name) const {
  for (std::size_t i = 0; i < kMetricCount; ++i) {
    if (name == kMetricNames[i]) {
      return corpus[i];
    }
  }
  throw std::invalid_argument("rouge: unknown metric " + name);
}

std::string Report::table() const {
  std::ostringstream out;
  out << std::left << std::setw(10) << "metric" << std::right << std::setw(9)
      << "P" << std::setw(9) << "R" << std::setw(9) << "F" << '\n';
  out << std::fixed << std::setprecision(4);
  for (std::size_t i = 0; i < kMetricCount; ++i) {
    out << std::left << std::setw(10) << kMetricNames[i] << std::right
        << std::setw(9) << corpus[i].precision << std::setw(9)
        << corpus[i].recall << std::setw(9) << corpus[i].f << '\n';
  }
  return out.str();
}

std::string Report::tsv() const {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "metric\tP\tR\tF\n";
  for (std::size_t i = 0; i < kMetricCount; ++i) {
    out << kMetricNames[i] << '\t' << corpus[i].precision << '\t'
        << corpus[i].recall << '\t' << corpus[i].f << '\n';
  }
  return out.str();
}

Report score_corpus(const std::vector<std::string>& candidates,
                    const std::vector<std::vector<std::string>>& references,
                    const Options& options) {
  if (references.empty()) {
    throw std::invalid_argument("rouge: no reference files given");
  }
  for (std::size_t k = 0; k < references.size(); ++k) {
    if (references[k].size() != candidates.size()) {
      throw std::invalid_argument(
          "rouge: candidate file has " + std::to_string(candidates.size()) +
          " lines but reference file " + std::to_string(k) + " has " +
          std::to_string(references[k].size()));
    }
  }
  Report report;
  report.options = options;
  report.per_example.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const std::string cand_line =
        truncate_bytes(candidates[i], options.byte_limit);
    const Tokens cand = data::tokenize(cand_line, options.token_mode);
    std::vector<Tokens> refs;
    refs.reserve(references.size());
    for (const auto& ref_file : references) {
      refs.push_back(data::tokenize(ref_file[i], options.token_mode));
    }
    report.per_example.push_back(score_example(cand, refs, options.mode));
  }
  if (!report.per_example.empty()) {
    const double inv = 1.0 / static_cast<double>(report.per_example.size());
    for (std::size_t m = 0; m < kMetricCount; ++m) {
      for (const ExampleScores& ex : report.per_example) {
        report.corpus[m].precision += ex.metrics[m].precision * inv;
        report.corpus[m].recall += ex.metrics[m].recall * inv;
        report.corpus[m].f += ex.metrics[m].f * inv;
      }
    }
  }
  return report;
}

}  // namespace drgd::rouge
