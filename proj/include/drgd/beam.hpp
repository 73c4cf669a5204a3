// SPDX-License-Identifier: Apache-2.0
//
// Beam-search decoding. The search itself is generic over a step source so
// tests can drive it with hand-built distributions; ModelSearch adapts the
// trained model.
//
// Semantics: every live hypothesis is expanded over the full vocabulary
// (PAD and BOS are never emitted), the top beam_size expansions by
// accumulated log-probability survive, EOS-terminated ones retire into a
// completed pool, and the search stops when the beam empties or max_len is
// reached (survivors are force-finished and scored as-is). Ties break by
// lexicographic token-id order, so results are exactly reproducible.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "drgd/data.hpp"
#include "drgd/model.hpp"

namespace drgd::beam {

template <class State>
struct Hypothesis {
  std::vector<int> tokens;
  double log_prob = 0.0;
  State state{};                  // state after consuming `tokens`
  Eigen::VectorXd next_log_probs; // distribution over the next token
  bool finished = false;
};

// A search model provides:
//   struct State;
//   struct Stepped { Eigen::VectorXd log_probs; State state; };
//   Stepped start();                         // consume BOS
//   Stepped advance(const State&, int tok);  // consume an emitted token
//
// length_alpha > 0 ranks the completed pool by log_prob / length^alpha (an
// optional extension; 0 keeps the raw accumulated score).
template <class M>
std::vector<Hypothesis<typename M::State>> beam_search(
    M& model, std::size_t beam_size, std::size_t max_len,
    double length_alpha = 0.0) {
  if (beam_size < 1) {
    throw std::invalid_argument("beam_search: beam_size must be >= 1");
  }
  if (max_len < 1) {
    throw std::invalid_argument("beam_search: max_len must be >= 1");
  }
  using Hyp = Hypothesis<typename M::State>;

  std::vector<Hyp> live(1);
  {
    auto first = model.start();
    live[0].state = std::move(first.state);
    live[0].next_log_probs = std::move(first.log_probs);
  }

  struct Candidate {
    std::size_t parent;
    int token;
    double score;
  };
  auto candidate_less = [&live](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) {
      return a.score > b.score;
    }
    // Lexicographic token-id order over the full would-be sequence.
    const auto& ta = live[a.parent].tokens;
    const auto& tb = live[b.parent].tokens;
    const std::size_t na = ta.size() + 1;
    const std::size_t nb = tb.size() + 1;
    for (std::size_t i = 0; i < std::min(na, nb); ++i) {
      const int va = i < ta.size() ? ta[i] : a.token;
      const int vb = i < tb.size() ? tb[i] : b.token;
      if (va != vb) {
        return va < vb;
      }
    }
    return na < nb;
  };

  std::vector<Hyp> completed;
  for (std::size_t step = 1; !live.empty() && step <= max_len; ++step) {
    std::vector<Candidate> candidates;
    candidates.reserve(live.size() *
                       static_cast<std::size_t>(live[0].next_log_probs.size()));
    for (std::size_t h = 0; h < live.size(); ++h) {
      const Eigen::VectorXd& lp = live[h].next_log_probs;
      for (int tok = 0; tok < lp.size(); ++tok) {
        if (tok == data::kPadId || tok == data::kBosId ||
            lp(tok) == -std::numeric_limits<double>::infinity()) {
          continue;  // zero-probability continuations are not hypotheses
        }
        candidates.push_back(
            Candidate{h, tok, live[h].log_prob + lp(tok)});
      }
    }
    const std::size_t keep = std::min(beam_size, candidates.size());
    std::partial_sort(candidates.begin(),
                      candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                      candidates.end(), candidate_less);
    candidates.resize(keep);

    std::vector<Hyp> next_live;
    for (const Candidate& c : candidates) {
      Hyp hyp;
      hyp.tokens = live[c.parent].tokens;
      hyp.tokens.push_back(c.token);
      hyp.log_prob = c.score;
      if (c.token == data::kEosId || step == max_len) {
        hyp.finished = true;  // EOS-terminated or force-finished at max_len
        completed.push_back(std::move(hyp));
      } else {
        auto stepped = model.advance(live[c.parent].state, c.token);
        hyp.state = std::move(stepped.state);
        hyp.next_log_probs = std::move(stepped.log_probs);
        next_live.push_back(std::move(hyp));
      }
    }
    live = std::move(next_live);
  }

  auto ranking_score = [length_alpha](const Hyp& h) {
    return h.log_prob /
           std::pow(static_cast<double>(h.tokens.size()), length_alpha);
  };
  std::sort(completed.begin(), completed.end(),
            [&](const Hyp& a, const Hyp& b) {
              const double sa = ranking_score(a);
              const double sb = ranking_score(b);
              if (sa != sb) {
                return sa > sb;
              }
              return a.tokens < b.tokens;
            });
  return completed;
}

// Adapter decoding one source sequence with the trained model. Owns the
// tape that carries the whole decode graph.
class ModelSearch {
 public:
  struct State {
    DecoderState decoder;
    LatentState latent;
  };
  struct Stepped {
    Eigen::VectorXd log_probs;
    State state;
  };

  // rng supplies the latent noise in sampling mode; unused when
  // deterministic_z is set.
  ModelSearch(ModelParams& params, const std::vector<int>& source,
              bool deterministic_z = true, Rng* rng = nullptr);

  Stepped start();
  Stepped advance(const State& state, int token);

 private:
  Stepped run_step(const State& state, int token);

  ModelParams& params_;
  ad::Tape tape_;
  EncoderOutput enc_;
  AttentionCache cache_;
  bool deterministic_z_;
  Rng* rng_;
};

struct DecodeResult {
  std::vector<int> tokens;  // includes the terminal EOS when one was emitted
  double log_prob = 0.0;
};

// Convenience wrapper: full beam search over one source, best-first results.
std::vector<DecodeResult> decode_source(ModelParams& params,
                                        const std::vector<int>& source,
                                        std::size_t beam_size,
                                        std::size_t max_len,
                                        bool deterministic_z = true,
                                        Rng* rng = nullptr,
                                        double length_alpha = 0.0);

}  // namespace drgd::beam
