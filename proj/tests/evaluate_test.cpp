#include <doctest.h>

#include <vector>

#include "crowdlab/error.hpp"
#include "crowdlab/evaluate.hpp"

using namespace crowdlab;

namespace {

LabelSet bio_labels() {
  LabelSet l;
  l.intern("O");
  l.intern("B-PER");
  l.intern("I-PER");
  l.intern("B-LOC");
  l.intern("I-LOC");
  return l;
}

}  // namespace

TEST_SUITE("evaluate") {

TEST_CASE("token accuracy is the plain hit rate") {
  CHECK(token_accuracy({0, 1, 2, 1}, {0, 1, 1, 1}) == doctest::Approx(0.75));
  CHECK(token_accuracy({3}, {3}) == 1.0);
  CHECK(token_accuracy({0, 0}, {1, 1}) == 0.0);
  CHECK_THROWS_AS(token_accuracy({0}, {0, 1}), Error);
  CHECK_THROWS_AS(token_accuracy({}, {}), Error);
}

TEST_CASE("span scoring follows conll chunking for prefixed labels") {
  const auto labels = bio_labels();
  // gold: [B-PER I-PER O B-LOC I-LOC O B-PER O]
  const std::vector<int> gold{1, 2, 0, 3, 4, 0, 1, 0};
  // pred: LOC cut short, second PER opened by a bare I- tag
  const std::vector<int> pred{1, 2, 0, 3, 0, 0, 2, 0};
  const auto score = span_f1(pred, gold, {8}, labels);
  CHECK(score.gold_spans == 3);
  CHECK(score.predicted_spans == 3);
  CHECK(score.matched == 2);  // PER(0,2) and the I-opened PER(6,7)
  CHECK(score.precision == doctest::Approx(2.0 / 3.0));
  CHECK(score.recall == doctest::Approx(2.0 / 3.0));
  CHECK(score.f1 == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("adjacent begins and type switches close chunks") {
  const auto labels = bio_labels();
  // B-PER B-PER -> two length-1 spans; I-LOC after B-PER starts a LOC span.
  const std::vector<int> gold{1, 1, 1, 4};
  const auto self = span_f1(gold, gold, {4}, labels);
  CHECK(self.gold_spans == 4);
  CHECK(self.matched == 4);
  CHECK(self.f1 == 1.0);
}

TEST_CASE("spans never cross sequence boundaries") {
  const auto labels = bio_labels();
  const std::vector<int> gold{1, 2, 1, 2};
  // One sequence: spans (0,2) and (2,4). Two sequences: same flat labels,
  // still two spans, but their coordinates pin them to their sequences.
  const auto one = span_f1(gold, gold, {4}, labels);
  const auto two = span_f1(gold, gold, {2, 2}, labels);
  CHECK(one.gold_spans == 2);
  CHECK(two.gold_spans == 2);

  // The prediction's second sequence opens with a bare I- tag. Respecting the
  // boundary restarts the chunk there, so both per-sequence gold spans match;
  // gluing the sequences together would yield one long span and no matches.
  const std::vector<int> pred{1, 2, 2, 2};
  const auto cross = span_f1(pred, gold, {2, 2}, labels);
  CHECK(cross.predicted_spans == 2);
  CHECK(cross.matched == 2);
}

TEST_CASE("unprefixed labels score as maximal runs") {
  LabelSet labels;
  labels.intern("A");
  labels.intern("B");
  const std::vector<int> gold{0, 0, 1, 1, 0};
  const std::vector<int> pred{0, 1, 1, 1, 0};
  const auto score = span_f1(pred, gold, {5}, labels);
  CHECK(score.gold_spans == 3);  // A(0,2) B(2,4) A(4,5)
  CHECK(score.predicted_spans == 3);
  CHECK(score.matched == 1);  // A(4,5)
  CHECK(score.precision == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("degenerate span sets fall back to zero scores") {
  const auto labels = bio_labels();
  const std::vector<int> all_o{0, 0, 0};
  const std::vector<int> some{1, 2, 0};
  const auto none = span_f1(all_o, all_o, {3}, labels);
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);
  CHECK(none.f1 == 0.0);

  const auto miss = span_f1(all_o, some, {3}, labels);
  CHECK(miss.predicted_spans == 0);
  CHECK(miss.gold_spans == 1);
  CHECK(miss.f1 == 0.0);

  CHECK_THROWS_AS(span_f1({0}, {0, 0}, {2}, labels), Error);
  CHECK_THROWS_AS(span_f1(all_o, all_o, {2}, labels), Error);
}

TEST_CASE("ambiguity scoring measures doubly-labeled recall") {
  Corpus corpus;
  corpus.labels.intern("A");
  corpus.labels.intern("B");
  corpus.labels.intern("C");
  Sequence seq;
  for (int k = 0; k < 4; ++k) {
    Token tok;
    tok.surface = "t" + std::to_string(k);
    tok.gold[0] = k % 3;
    seq.tokens.push_back(tok);
  }
  seq.tokens[1].gold[1] = 0;  // gold pair (B, A)
  seq.tokens[3].gold[1] = 2;  // gold pair (A, C)
  corpus.sequences.push_back(seq);

  const std::vector<std::vector<int>> candidates{{0}, {1, 0}, {2}, {0}};
  const auto score = score_ambiguity(corpus, {1, 2}, candidates);
  CHECK(score.gold_ambiguous == 2);
  CHECK(score.flagged_recall == doctest::Approx(0.5));   // token 3 unflagged
  CHECK(score.candidate_recall == doctest::Approx(0.5)); // token 3 lacks C

  CHECK_THROWS_AS(score_ambiguity(corpus, {1}, {{0}, {1}}), Error);
  Corpus plain = corpus;
  plain.sequences[0].tokens[1].gold[1] = -1;
  plain.sequences[0].tokens[3].gold[1] = -1;
  CHECK_THROWS_AS(score_ambiguity(plain, {1}, candidates), Error);
}

TEST_CASE("confusability comparison ranks pairs deterministically") {
  Matrix left(3, 3), right(3, 3);
  left(0, 1) = left(1, 0) = 0.3;
  left(0, 2) = left(2, 0) = 0.1;
  left(1, 2) = left(2, 1) = 0.3;
  const auto cmp = compare_confusability(left, right, 2);
  CHECK(cmp.mean_abs_diff == doctest::Approx((0.3 + 0.1 + 0.3) / 3.0));

  REQUIRE(cmp.top_left.size() == 2);
  CHECK(cmp.top_left[0].first == 0);  // value tie: lexicographically first pair
  CHECK(cmp.top_left[0].second == 1);
  CHECK(cmp.top_left[1].first == 1);
  CHECK(cmp.top_left[1].second == 2);
  CHECK(cmp.top_left[0].value == doctest::Approx(0.3));

  REQUIRE(cmp.top_right.size() == 2);
  CHECK(cmp.top_right[0].first == 0);  // all zero: ordered purely by pair
  CHECK(cmp.top_right[0].second == 1);
  CHECK(cmp.top_right[1].first == 0);
  CHECK(cmp.top_right[1].second == 2);

  CHECK_THROWS_AS(compare_confusability(Matrix(2, 2), Matrix(3, 3), 1), Error);
  CHECK_THROWS_AS(compare_confusability(Matrix(1, 1), Matrix(1, 1), 1), Error);
  CHECK_THROWS_AS(compare_confusability(Matrix(2, 3), Matrix(2, 3), 1), Error);
}

}  // TEST_SUITE
