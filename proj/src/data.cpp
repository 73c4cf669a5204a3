// SPDX-License-Identifier: Apache-2.0

#include "drgd/data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace drgd::data {

namespace {

const std::vector<std::string> kReserved = {"<pad>", "<unk>", "<bos>",
                                            "<eos>"};

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' ||
         c == '\f';
}

// Returns the code point length of the UTF-8 sequence starting at `i`, or 0
// when the sequence is malformed.
std::size_t utf8_len(const std::string& s, std::size_t i) {
  const unsigned char c = static_cast<unsigned char>(s[i]);
  std::size_t len = 0;
  if (c < 0x80) {
    len = 1;
  } else if ((c & 0xE0) == 0xC0) {
    len = 2;
  } else if ((c & 0xF0) == 0xE0) {
    len = 3;
  } else if ((c & 0xF8) == 0xF0) {
    len = 4;
  } else {
    return 0;
  }
  if (i + len > s.size()) {
    return 0;
  }
  for (std::size_t k = 1; k < len; ++k) {
    if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) {
      return 0;
    }
  }
  return len;
}

[[noreturn]] void bad_encoding(std::size_t offset) {
  throw std::invalid_argument("tokenize: invalid UTF-8 at byte offset " +
                              std::to_string(offset));
}

}  // namespace

TokenMode token_mode_from_string(const std::string& name) {
  if (name == "word") {
    return TokenMode::kWord;
  }
  if (name == "char") {
    return TokenMode::kChar;
  }
  throw std::invalid_argument("unknown tokenizer mode: " + name);
}

std::string to_string(TokenMode mode) {
  return mode == TokenMode::kWord ? "word" : "char";
}

std::vector<std::string> tokenize(const std::string& text, TokenMode mode) {
  std::vector<std::string> out;
  if (mode == TokenMode::kWord) {
    std::string cur;
    std::size_t i = 0;
    while (i < text.size()) {
      const unsigned char c = static_cast<unsigned char>(text[i]);
      if (c < 0x80) {
        if (is_space(c)) {
          if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
          }
        } else if (std::isdigit(c)) {
          cur.push_back('#');
        } else {
          cur.push_back(static_cast<char>(std::tolower(c)));
        }
        ++i;
      } else {
        const std::size_t len = utf8_len(text, i);
        if (len == 0) {
          bad_encoding(i);
        }
        cur.append(text, i, len);
        i += len;
      }
    }
    if (!cur.empty()) {
      out.push_back(cur);
    }
  } else {
    std::size_t i = 0;
    while (i < text.size()) {
      const unsigned char c = static_cast<unsigned char>(text[i]);
      if (c < 0x80) {
        if (!is_space(c)) {
          out.emplace_back(1, text[i]);
        }
        ++i;
      } else {
        const std::size_t len = utf8_len(text, i);
        if (len == 0) {
          bad_encoding(i);
        }
        out.push_back(text.substr(i, len));
        i += len;
      }
    }
  }
  return out;
}

Vocab::Vocab() {
  for (const std::string& t : kReserved) {
    ids_[t] = static_cast<int>(tokens_.size());
    tokens_.push_back(t);
  }
}

int Vocab::add(const std::string& token) {
  auto it = ids_.find(token);
  if (it != ids_.end()) {
    return it->second;
  }
  const int id = static_cast<int>(tokens_.size());
  ids_[token] = id;
  tokens_.push_back(token);
  return id;
}

int Vocab::id_of(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnkId : it->second;
}

const std::string& Vocab::token_of(int id) const {
  if (id < 0 || id >= size()) {
    throw std::out_of_range("vocab: id " + std::to_string(id) +
                            " outside [0, " + std::to_string(size()) + ")");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocab::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const std::string& t : tokens) {
    out.push_back(id_of(t));
  }
  return out;
}

std::vector<std::string> Vocab::decode(const std::vector<int>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int id : ids) {
    out.push_back(token_of(id));
  }
  return out;
}

void Vocab::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw std::runtime_error("vocab: cannot write " + path);
  }
  for (const std::string& t : tokens_) {
    f << t << '\n';
  }
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw std::runtime_error("vocab: cannot read " + path);
  }
  Vocab v;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (lineno < kReservedCount) {
      if (line != kReserved[static_cast<std::size_t>(lineno)]) {
        throw std::runtime_error("vocab: line " + std::to_string(lineno + 1) +
                                 " of " + path + " must be " +
                                 kReserved[static_cast<std::size_t>(lineno)]);
      }
    } else {
      if (v.add(line) != lineno) {
        throw std::runtime_error("vocab: duplicate token '" + line + "' in " +
                                 path);
      }
    }
    ++lineno;
  }
  if (lineno < kReservedCount) {
    throw std::runtime_error("vocab: " + path + " is missing reserved tokens");
  }
  return v;
}

Vocab build_vocab(const std::vector<std::vector<std::string>>& sequences,
                  std::size_t max_size, std::size_t min_count) {
  if (max_size < static_cast<std::size_t>(kReservedCount) + 1) {
    throw std::invalid_argument("build_vocab: max_size " +
                                std::to_string(max_size) +
                                " leaves no room beyond the reserved tokens");
  }
  std::map<std::string, std::size_t> counts;
  for (const auto& seq : sequences) {
    for (const std::string& t : seq) {
      ++counts[t];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> items(counts.begin(),
                                                         counts.end());
  // Frequency descending, lexicographic within ties (map iteration already
  // sorted lexicographically; stable sort keeps that order).
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) {
                     return a.second > b.second;
                   });
  Vocab v;
  for (const auto& [token, count] : items) {
    if (count < min_count) {
      continue;
    }
    if (static_cast<std::size_t>(v.size()) >= max_size) {
      break;
    }
    v.add(token);
  }
  return v;
}

std::size_t Batch::source_len(Eigen::Index row) const {
  const auto& m = source_mask[static_cast<std::size_t>(row)];
  return static_cast<std::size_t>(std::count(m.begin(), m.end(), 1));
}

std::size_t Batch::target_len(Eigen::Index row) const {
  const auto& m = target_mask[static_cast<std::size_t>(row)];
  return static_cast<std::size_t>(std::count(m.begin(), m.end(), 1));
}

std::vector<int> Batch::source_row(Eigen::Index row) const {
  std::vector<int> out;
  for (std::size_t j = 0; j < source_len(row); ++j) {
    out.push_back(source_ids(row, static_cast<Eigen::Index>(j)));
  }
  return out;
}

std::vector<int> Batch::target_row(Eigen::Index row) const {
  std::vector<int> out;
  for (std::size_t j = 0; j < target_len(row); ++j) {
    out.push_back(target_ids(row, static_cast<Eigen::Index>(j)));
  }
  return out;
}

std::vector<Batch> make_batches(const ParallelCorpus& corpus,
                                const Vocab& source_vocab,
                                const Vocab& target_vocab,
                                std::size_t batch_size,
                                std::size_t max_src_len,
                                std::size_t max_tgt_len, std::uint64_t seed) {
  if (batch_size == 0) {
    throw std::invalid_argument("make_batches: batch_size must be >= 1");
  }
  if (max_src_len == 0 || max_tgt_len < 2) {
    throw std::invalid_argument(
        "make_batches: need max_src_len >= 1 and max_tgt_len >= 2");
  }
  struct Prepared {
    std::vector<int> src;
    std::vector<int> tgt;  // content + EOS
  };
  std::vector<Prepared> prepared;
  prepared.reserve(corpus.size());
  for (const Example& ex : corpus.examples) {
    Prepared p;
    p.src = source_vocab.encode(ex.source);
    if (p.src.size() > max_src_len) {
      p.src.resize(max_src_len);
    }
    p.tgt = target_vocab.encode(ex.target);
    // EOS is accounted inside the length budget; at least one content token
    // always survives.
    if (p.tgt.size() > max_tgt_len - 1) {
      p.tgt.resize(max_tgt_len - 1);
    }
    p.tgt.push_back(kEosId);
    prepared.push_back(std::move(p));
  }

  std::vector<std::size_t> order(prepared.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  // Sort by source length inside windows of 20 batches; keeps padding low
  // without undoing the shuffle.
  const std::size_t window = 20 * batch_size;
  for (std::size_t start = 0; start < order.size(); start += window) {
    const std::size_t stop = std::min(start + window, order.size());
    std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(stop),
                     [&](std::size_t a, std::size_t b) {
                       return prepared[a].src.size() < prepared[b].src.size();
                     });
  }

  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t stop = std::min(start + batch_size, order.size());
    const Eigen::Index rows = static_cast<Eigen::Index>(stop - start);
    std::size_t s_width = 0;
    std::size_t t_width = 0;
    for (std::size_t k = start; k < stop; ++k) {
      s_width = std::max(s_width, prepared[order[k]].src.size());
      t_width = std::max(t_width, prepared[order[k]].tgt.size());
    }
    Batch b;
    b.source_ids = Eigen::MatrixXi::Constant(
        rows, static_cast<Eigen::Index>(s_width), kPadId);
    b.target_ids = Eigen::MatrixXi::Constant(
        rows, static_cast<Eigen::Index>(t_width), kPadId);
    b.source_mask.assign(static_cast<std::size_t>(rows),
                         std::vector<std::uint8_t>(s_width, 0));
    b.target_mask.assign(static_cast<std::size_t>(rows),
                         std::vector<std::uint8_t>(t_width, 0));
    for (std::size_t k = start; k < stop; ++k) {
      const Prepared& p = prepared[order[k]];
      const Eigen::Index r = static_cast<Eigen::Index>(k - start);
      for (std::size_t j = 0; j < p.src.size(); ++j) {
        b.source_ids(r, static_cast<Eigen::Index>(j)) = p.src[j];
        b.source_mask[static_cast<std::size_t>(r)][j] = 1;
      }
      for (std::size_t j = 0; j < p.tgt.size(); ++j) {
        b.target_ids(r, static_cast<Eigen::Index>(j)) = p.tgt[j];
        b.target_mask[static_cast<std::size_t>(r)][j] = 1;
      }
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

namespace {

struct Lexicons {
  std::vector<std::string> actors = {
      "apple",      "google",   "uber",        "twitter",    "the senate",
      "the museum", "the city", "the startup", "the league", "the studio"};
  std::vector<std::string> verbs = {"sues",    "buys",  "fixes",   "launches",
                                    "bans",    "wins",  "cancels", "approves",
                                    "acquires", "delays"};
  std::vector<std::string> objects = {
      "the rival app",     "the new phone",   "the merger",
      "the broken update", "the festival",    "the funding round",
      "the title",         "the proposal",    "the pilot program",
      "the expansion"};
  std::vector<std::string> topics = {
      "the cyber cold war", "the housing crunch", "the transit overhaul",
      "the data leak",      "the trade dispute"};
  std::vector<std::string> subjects = {"library computers", "city servers",
                                       "train schedules",   "park fountains",
                                       "ticket kiosks"};
  std::vector<std::string> events = {"hacked", "restored", "upgraded",
                                     "suspended", "rebuilt"};
  std::vector<std::string> days = {"monday", "tuesday", "wednesday",
                                   "thursday", "friday"};
  std::vector<std::string> distractors = {
      "despite earlier doubts",        "according to officials",
      "after months of talks",         "to the surprise of analysts",
      "amid a wave of speculation"};
};

template <class T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[static_cast<std::size_t>(rng.below(v.size()))];
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const std::string& p : parts) {
    if (!out.empty()) {
      out += ' ';
    }
    out += p;
  }
  return out;
}

}  // namespace

ParallelCorpus synth_corpus(std::size_t n_pairs, std::uint64_t seed) {
  if (n_pairs == 0) {
    throw std::invalid_argument("synth_corpus: n_pairs must be >= 1");
  }
  Lexicons lex;
  Rng rng(seed);
  ParallelCorpus corpus;
  std::set<std::string> seen;
  while (corpus.examples.size() < n_pairs) {
    const int tmpl = static_cast<int>(rng.below(3));
    std::string source;
    std::string target;
    if (tmpl == 0) {
      // subject - verb - object
      const std::string& who = pick(lex.actors, rng);
      const std::string& action = pick(lex.verbs, rng);
      const std::string& what = pick(lex.objects, rng);
      const std::string& day = pick(lex.days, rng);
      const std::string& extra = pick(lex.distractors, rng);
      source = join({"officials said on", day, "that", who, action, what,
                     ",", extra});
      target = join({who, action, what});
    } else if (tmpl == 1) {
      // bare noun phrase
      const std::string& topic = pick(lex.topics, rng);
      const std::string& extra = pick(lex.distractors, rng);
      const std::string& day = pick(lex.days, rng);
      source = join({"reports on", day, "described", topic, ",", extra});
      target = topic;
    } else {
      // subject plus event
      const std::string& subject = pick(lex.subjects, rng);
      const std::string& event = pick(lex.events, rng);
      const std::string& day = pick(lex.days, rng);
      const std::string& extra = pick(lex.distractors, rng);
      source = join({subject, "were", event, "on", day, ",", extra});
      target = join({subject, event});
    }
    if (!seen.insert(source).second) {
      continue;  // keep sources unique so the mapping stays a function
    }
    Example ex;
    ex.source = tokenize(source, TokenMode::kWord);
    ex.target = tokenize(target, TokenMode::kWord);
    ex.template_id = tmpl;
    corpus.examples.push_back(std::move(ex));
  }
  return corpus;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw std::runtime_error("cannot read " + path);
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    lines.push_back(line);
  }
  return lines;
}

void write_lines(const std::string& path,
                 const std::vector<std::string>& lines) {
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw std::runtime_error("cannot write " + path);
  }
  for (const std::string& l : lines) {
    f << l << '\n';
  }
}

ParallelCorpus load_corpus(const std::string& source_path,
                           const std::string& target_path, TokenMode mode,
                           std::size_t* dropped) {
  const std::vector<std::string> src = read_lines(source_path);
  const std::vector<std::string> tgt = read_lines(target_path);
  if (src.size() != tgt.size()) {
    throw std::runtime_error("corpus: " + source_path + " has " +
                             std::to_string(src.size()) + " lines but " +
                             target_path + " has " +
                             std::to_string(tgt.size()));
  }
  ParallelCorpus corpus;
  std::size_t drop_count = 0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    Example ex;
    ex.source = tokenize(src[i], mode);
    ex.target = tokenize(tgt[i], mode);
    if (ex.source.empty() || ex.target.empty()) {
      ++drop_count;
      continue;
    }
    corpus.examples.push_back(std::move(ex));
  }
  if (dropped != nullptr) {
    *dropped = drop_count;
  }
  return corpus;
}

}  // namespace drgd::data
