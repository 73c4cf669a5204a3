// SPDX-License-Identifier: Apache-2.0

#include "drgd/rouge.hpp"

#include <doctest.h>

#include "drgd/rng.hpp"

using namespace drgd;
using rouge::Tokens;

TEST_CASE("identical texts score 1.0 on every metric") {
  const Tokens x = {"the", "cat", "sat"};
  for (const auto& s :
       {rouge::rouge_n(x, {x}, 1), rouge::rouge_n(x, {x}, 2),
        rouge::rouge_l(x, {x}), rouge::rouge_su4(x, {x})}) {
    CHECK(s.precision == doctest::Approx(1.0));
    CHECK(s.recall == doctest::Approx(1.0));
    CHECK(s.f == doctest::Approx(1.0));
  }
}

TEST_CASE("the-cat fixture reproduces the hand counts") {
  const Tokens cand = {"the", "cat"};
  const Tokens ref = {"the", "cat", "sat"};
  const rouge::Score r1 = rouge::rouge_n(cand, {ref}, 1);
  CHECK(r1.precision == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r1.recall == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(r1.f == doctest::Approx(0.8).epsilon(1e-12));
  const rouge::Score r2 = rouge::rouge_n(cand, {ref}, 2);
  CHECK(r2.precision == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r2.recall == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r2.f == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  const rouge::Score rl = rouge::rouge_l(cand, {ref});
  CHECK(rl.f == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("disjoint token sets score zero") {
  const rouge::Score s = rouge::rouge_n({"a", "b"}, {{"c", "d"}}, 1);
  CHECK(s.precision == 0.0);
  CHECK(s.recall == 0.0);
  CHECK(s.f == 0.0);
}

TEST_CASE("LCS of a-c-b against a-b-c is two") {
  // Brute force over all subsequences gives LCS length 2 ("a c" or "a b").
  const rouge::Score s = rouge::rouge_l({"a", "c", "b"}, {{"a", "b", "c"}});
  CHECK(s.precision == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(s.recall == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(s.f == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("empty candidates score zero, empty reference lists throw") {
  CHECK(rouge::rouge_l({}, {{"a"}}).f == 0.0);
  CHECK(rouge::rouge_n({}, {{"a"}}, 1).f == 0.0);
  CHECK_THROWS_AS(rouge::rouge_n({"a"}, {}, 1), std::invalid_argument);
  CHECK_THROWS_AS(rouge::rouge_l({"a"}, {}), std::invalid_argument);
  CHECK_THROWS_AS(rouge::rouge_su4({"a"}, {}), std::invalid_argument);
}

TEST_CASE("su4 units of a-b-c are the three unigrams plus three pairs") {
  // Hand enumeration with gap <= 4: {a, b, c, ab, ac, bc}. A reference
  // containing only {a, b, ab} overlaps three of the six units.
  const rouge::Score s = rouge::rouge_su4({"a", "b", "c"}, {{"a", "b"}});
  CHECK(s.precision == doctest::Approx(3.0 / 6.0).epsilon(1e-12));
  CHECK(s.recall == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rouge::rouge_su4({"a"}, {{"b"}}).f == 0.0);
}

TEST_CASE("su4 respects the maximum gap") {
  // f is 5 positions after a, so the pair (a, f) is not a unit.
  const Tokens cand = {"a", "b", "c", "d", "e", "f"};
  const rouge::Score with_pair = rouge::rouge_su4(cand, {{"a", "e"}});
  const rouge::Score without_pair = rouge::rouge_su4(cand, {{"a", "f"}});
  // (a, e) is within the gap; its reference overlaps {a, e, ae} = 3 units.
  // (a, f) is beyond it; its reference overlaps {a, f} = 2 units only.
  CHECK(with_pair.precision > without_pair.precision);
}

TEST_CASE("multi-reference scoring takes the best reference") {
  const Tokens cand = {"a", "b"};
  const std::vector<Tokens> one = {{"c", "d"}};
  const std::vector<Tokens> two = {{"c", "d"}, {"a", "b"}};
  CHECK(rouge::rouge_n(cand, one, 1).f == 0.0);
  CHECK(rouge::rouge_n(cand, two, 1).f == doctest::Approx(1.0));
  // Monotone: adding a reference never lowers the score.
  Rng rng(5);
  const std::vector<std::string> pool = {"a", "b", "c", "d", "e"};
  for (int trial = 0; trial < 20; ++trial) {
    auto draw = [&] {
      Tokens t;
      const std::size_t len = 1 + rng.below(5);
      for (std::size_t i = 0; i < len; ++i) {
        t.push_back(pool[rng.below(pool.size())]);
      }
      return t;
    };
    const Tokens c = draw();
    std::vector<Tokens> refs = {draw()};
    const double before = rouge::rouge_n(c, refs, 1).f;
    refs.push_back(draw());
    CHECK(rouge::rouge_n(c, refs, 1).f >= before);
  }
}

TEST_CASE("rouge-l recall never exceeds rouge-1 recall") {
  Rng rng(7);
  const std::vector<std::string> pool = {"a", "b", "c", "d"};
  for (int trial = 0; trial < 50; ++trial) {
    auto draw = [&] {
      Tokens t;
      const std::size_t len = 1 + rng.below(6);
      for (std::size_t i = 0; i < len; ++i) {
        t.push_back(pool[rng.below(pool.size())]);
      }
      return t;
    };
    const Tokens cand = draw();
    const std::vector<Tokens> refs = {draw()};
    CHECK(rouge::rouge_l(cand, refs).recall <=
          rouge::rouge_n(cand, refs, 1).recall + 1e-12);
  }
}

TEST_CASE("scores ignore trailing whitespace") {
  rouge::Options options;
  const auto a = rouge::score_corpus({"the cat"}, {{"the cat sat"}}, options);
  const auto b =
      rouge::score_corpus({"the cat   "}, {{"the cat sat\t"}}, options);
  for (std::size_t m = 0; m < rouge::kMetricCount; ++m) {
    CHECK(a.corpus[m].f == b.corpus[m].f);
  }
}

TEST_CASE("corpus scoring averages per-example scores") {
  rouge::Options options;
  // Example 1: F = 0.8 on rouge-1; example 2: disjoint, F = 0.4 comes from
  // a half-overlap pair chosen to land on round numbers.
  const auto report = rouge::score_corpus(
      {"the cat", "x y z w"}, {{"the cat sat", "x q q q"}}, options);
  // First example rouge-1 F = 0.8; second: P = 1/4, R = 1/4, F = 1/4.
  CHECK(report.per_example[0].metrics[0].f ==
        doctest::Approx(0.8).epsilon(1e-12));
  CHECK(report.per_example[1].metrics[0].f ==
        doctest::Approx(0.25).epsilon(1e-12));
  CHECK(report.corpus[0].f == doctest::Approx(0.525).epsilon(1e-12));

  SUBCASE("single-example corpora match the example score") {
    const auto single =
        rouge::score_corpus({"the cat"}, {{"the cat sat"}}, options);
    CHECK(single.corpus[0].f ==
          doctest::Approx(single.per_example[0].metrics[0].f));
  }
}

TEST_CASE("byte limits truncate candidates before scoring") {
  rouge::Options unlimited;
  rouge::Options limited;
  limited.byte_limit = 7;  // "the cat" survives, " sat" does not
  const auto full = rouge::score_corpus({"the cat sat"}, {{"the cat sat"}},
                                        unlimited);
  const auto cut =
      rouge::score_corpus({"the cat sat"}, {{"the cat sat"}}, limited);
  CHECK(full.corpus[0].f == doctest::Approx(1.0));
  CHECK(cut.corpus[0].recall == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  SUBCASE("limits larger than the line change nothing") {
    rouge::Options big;
    big.byte_limit = 1000;
    const auto same = rouge::score_corpus({"the cat sat"}, {{"the cat sat"}},
                                          big);
    CHECK(same.corpus[0].f == doctest::Approx(1.0));
  }
  SUBCASE("UTF-8 sequences are not split") {
    CHECK(rouge::truncate_bytes("a\xe4\xb8\xadz", 2) == "a");
    CHECK(rouge::truncate_bytes("a\xe4\xb8\xadz", 4) == "a\xe4\xb8\xad");
  }
}

TEST_CASE("line count mismatches name both counts") {
  rouge::Options options;
  CHECK_THROWS_WITH_AS(
      rouge::score_corpus({"a", "b"}, {{"a"}}, options),
      "rouge: candidate file has 2 lines but reference file 0 has 1",
      std::invalid_argument);
}

TEST_CASE("recall mode keeps the reference with the best recall") {
  // Candidate covers all of ref A (high recall) but F favors ref B.
  const Tokens cand = {"a", "b", "c", "d"};
  const std::vector<Tokens> refs = {{"a"}, {"a", "b", "c", "d", "e", "f"}};
  const rouge::Score f_mode =
      rouge::score_example(cand, refs, rouge::ScoreMode::kF).metrics[0];
  const rouge::Score r_mode =
      rouge::score_example(cand, refs, rouge::ScoreMode::kRecall).metrics[0];
  CHECK(r_mode.recall >= f_mode.recall);
  CHECK(r_mode.recall == doctest::Approx(1.0));
}

TEST_CASE("identity property holds for random token sequences") {
  Rng rng(11);
  const std::vector<std::string> pool = {"a", "b", "c", "d", "e", "f", "g"};
  for (int trial = 0; trial < 100; ++trial) {
    Tokens x;
    const std::size_t len = 1 + rng.below(10);
    for (std::size_t i = 0; i < len; ++i) {
      x.push_back(pool[rng.below(pool.size())]);
    }
    const rouge::ExampleScores s = rouge::score_example(x, {x});
    for (std::size_t m = 0; m < rouge::kMetricCount; ++m) {
      // rouge-2 of a single token has no bigrams; empty unit sets score 0.
      if (m == 1 && x.size() < 2) {
        continue;
      }
      CHECK(s.metrics[m].f == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}
