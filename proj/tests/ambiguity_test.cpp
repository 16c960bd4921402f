#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "crowdlab/ambiguity.hpp"
#include "crowdlab/error.hpp"
#include "test_util.hpp"

using namespace crowdlab;
using testutil::TempDir;

namespace {

// Three reliable annotators (cluster 0) and one noise annotator (cluster 1)
// over three sequences:
//   seq 0 (len 5): full agreement everywhere
//   seq 1 (len 5): agreement except position 4, split 2 vs 1
//   seq 2 (len 2): only one reliable annotator, hence ineligible
struct Fixture {
  std::vector<std::size_t> lengths{5, 5, 2};
  std::vector<int> cluster{0, 0, 0, 1};
  std::vector<int> truth{0, 1, 2, 0, 1, 1, 0, 0, 2, 1, 2, 0};
  CrowdAnnotations crowd = build();

  static CrowdAnnotations build() {
    std::vector<Annotation> entries;
    const int seq0[5] = {0, 1, 2, 0, 1};
    for (int l = 0; l < 3; ++l)
      for (int j = 0; j < 5; ++j) entries.push_back({0, j, l, seq0[j]});
    for (int j = 0; j < 5; ++j) entries.push_back({0, j, 3, 2});

    const int seq1[3][5] = {{1, 0, 0, 2, 1}, {1, 0, 0, 2, 2}, {1, 0, 0, 2, 1}};
    for (int l = 0; l < 3; ++l)
      for (int j = 0; j < 5; ++j) entries.push_back({1, j, l, seq1[l][j]});
    for (int j = 0; j < 5; ++j) entries.push_back({1, j, 3, 0});

    entries.push_back({2, 0, 0, 2});
    entries.push_back({2, 1, 0, 0});
    entries.push_back({2, 0, 3, 1});
    entries.push_back({2, 1, 3, 1});
    return CrowdAnnotations::build(entries, {5, 5, 2}, 4);
  }
};

}  // namespace

TEST_SUITE("ambiguity") {

TEST_CASE("agreement counts include the annotator itself and skip holes") {
  const auto a = agreement_matrix({{0, 1}, {0, 1}, {0, 2}});
  CHECK(a(0, 0) == 3.0);
  CHECK(a(1, 0) == 3.0);
  CHECK(a(2, 0) == 3.0);
  CHECK(a(0, 1) == 2.0);
  CHECK(a(1, 1) == 2.0);
  CHECK(a(2, 1) == 1.0);

  const auto b = agreement_matrix({{0, -1}, {0, 0}});
  CHECK(b(0, 0) == 2.0);
  CHECK(b(1, 0) == 2.0);
  CHECK(b(0, 1) == 0.0);  // skipped cell
  CHECK(b(1, 1) == 1.0);  // self only; the skipper does not count

  CHECK_THROWS_AS(agreement_matrix({}), Error);
  CHECK_THROWS_AS(agreement_matrix({{0, 1}, {0}}), Error);
}

TEST_CASE("disagreement lowers the token weight and drives flagging") {
  Fixture fx;
  const auto res = analyze_ambiguity(fx.crowd, fx.lengths, fx.cluster, 0, fx.truth, 3,
                                     {0.2, true});

  CHECK(res.eligible_tokens == 10);
  CHECK(res.sequences[0].eligible);
  CHECK(res.sequences[1].eligible);
  CHECK_FALSE(res.sequences[2].eligible);
  CHECK(res.sequences[0].annotators == std::vector<int>{0, 1, 2});

  CHECK(std::isnan(res.mu[10]));
  CHECK(std::isnan(res.mu_norm[11]));
  for (std::size_t i = 0; i < 10; ++i) REQUIRE_FALSE(std::isnan(res.mu[i]));

  // Fully agreed positions normalize to 1; the split position falls below.
  for (std::size_t i = 0; i < 9; ++i) CHECK(res.mu_norm[i] == doctest::Approx(1.0));
  CHECK(res.mu_norm[9] < 0.95);

  // floor(0.2 * 10) = 2 flags: the split token plus, through the tie on the
  // normalized score, the earliest fully-agreed token.
  CHECK(res.flagged == std::vector<std::size_t>{0, 9});
}

TEST_CASE("flagged tokens carry ranked label candidates") {
  Fixture fx;
  const auto res = analyze_ambiguity(fx.crowd, fx.lengths, fx.cluster, 0, fx.truth, 3,
                                     {0.2, true});

  // Position (1, 4): two reliable annotators said 1, one said 2. The majority
  // supporters carry more factor weight, so 1 ranks first; the truth label is
  // already among the top two.
  REQUIRE(res.candidates[9].size() == 2);
  CHECK(res.candidates[9][0] == 1);
  CHECK(res.candidates[9][1] == 2);
  REQUIRE(res.label_scores[9].size() == 2);
  CHECK(res.label_scores[9][0].first == 1);
  CHECK(res.label_scores[9][0].second > res.label_scores[9][1].second);

  // The tie-flagged fully-agreed token has a single observed label equal to
  // the truth.
  CHECK(res.candidates[0] == std::vector<int>{0});

  // Unflagged tokens fall back to the aggregated truth.
  CHECK(res.candidates[3] == std::vector<int>{0});
  CHECK(res.candidates[10] == std::vector<int>{2});
  CHECK(res.label_scores[3].empty());
}

TEST_CASE("unreliable annotators have no influence on the scores") {
  Fixture fx;
  const auto with_noise = analyze_ambiguity(fx.crowd, fx.lengths, fx.cluster, 0, fx.truth, 3,
                                            {0.2, true});

  std::vector<Annotation> entries;
  for (const auto& e : fx.crowd.entries())
    if (e.annotator < 3) entries.push_back(e);
  const auto trimmed = CrowdAnnotations::build(entries, fx.lengths, 3);
  const auto without = analyze_ambiguity(trimmed, fx.lengths, {0, 0, 0}, 0, fx.truth, 3,
                                         {0.2, true});

  REQUIRE(with_noise.mu.size() == without.mu.size());
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(with_noise.mu[i] == without.mu[i]);
    CHECK(with_noise.mu_norm[i] == without.mu_norm[i]);
  }
  CHECK(with_noise.flagged == without.flagged);
}

TEST_CASE("raw scores rank when normalization is off") {
  Fixture fx;
  const auto res = analyze_ambiguity(fx.crowd, fx.lengths, fx.cluster, 0, fx.truth, 3,
                                     {0.2, false});
  CHECK(res.flagged.size() == 2);
  CHECK(std::find(res.flagged.begin(), res.flagged.end(), 9) != res.flagged.end());
}

TEST_CASE("flag quota respects the fraction") {
  Fixture fx;
  auto res = analyze_ambiguity(fx.crowd, fx.lengths, fx.cluster, 0, fx.truth, 3, {0.0, true});
  CHECK(res.flagged.empty());
  res = analyze_ambiguity(fx.crowd, fx.lengths, fx.cluster, 0, fx.truth, 3, {1.0, true});
  CHECK(res.flagged.size() == 10);  // every eligible token
  res = analyze_ambiguity(fx.crowd, fx.lengths, fx.cluster, 0, fx.truth, 3, {0.55, true});
  CHECK(res.flagged.size() == 5);  // floor(5.5)
}

TEST_CASE("analysis validates its inputs") {
  Fixture fx;
  CHECK_THROWS_AS(analyze_ambiguity(fx.crowd, fx.lengths, fx.cluster, 0, fx.truth, 3,
                                    {1.5, true}),
                  Error);
  CHECK_THROWS_AS(analyze_ambiguity(fx.crowd, fx.lengths, {0, 0}, 0, fx.truth, 3, {0.1, true}),
                  Error);
  auto bad_truth = fx.truth;
  bad_truth[0] = 7;
  CHECK_THROWS_AS(analyze_ambiguity(fx.crowd, fx.lengths, fx.cluster, 0, bad_truth, 3,
                                    {0.1, true}),
                  Error);
  CHECK_THROWS_AS(analyze_ambiguity(fx.crowd, {5, 5}, fx.cluster, 0, fx.truth, 3, {0.1, true}),
                  Error);
}

TEST_CASE("confusability averages the two directed rates") {
  // 10 tokens of truth 0, three of which carry 1 as an extra candidate; 10
  // tokens of truth 1, one of which carries 0.
  std::vector<int> truth;
  std::vector<std::vector<int>> cands;
  for (int i = 0; i < 10; ++i) {
    truth.push_back(0);
    cands.push_back(i < 3 ? std::vector<int>{0, 1} : std::vector<int>{0});
  }
  for (int i = 0; i < 10; ++i) {
    truth.push_back(1);
    cands.push_back(i < 1 ? std::vector<int>{1, 0} : std::vector<int>{1});
  }
  std::vector<bool> undefined;
  const auto cf = build_cf(cands, truth, 3, &undefined);
  CHECK(cf(0, 1) == doctest::Approx(0.2));  // (3/10 + 1/10) / 2
  CHECK(cf(1, 0) == doctest::Approx(0.2));
  CHECK(cf(0, 0) == 0.0);
  CHECK(cf(1, 1) == 0.0);
  CHECK(cf(2, 2) == 0.0);
  CHECK(cf(0, 2) == 0.0);
  CHECK(undefined == std::vector<bool>{false, false, true});
}

TEST_CASE("confusability is symmetric with a zero diagonal") {
  std::vector<int> truth{0, 1, 2, 0, 1, 2, 0};
  std::vector<std::vector<int>> cands{{0, 2}, {1}, {2, 0}, {0, 1}, {1, 2}, {2}, {0}};
  const auto cf = build_cf(cands, truth, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(cf(i, i) == 0.0);
    for (std::size_t j = 0; j < 3; ++j) CHECK(cf(i, j) == cf(j, i));
  }
  CHECK_THROWS_AS(build_cf({{0}}, {0, 1}, 2), Error);
  CHECK_THROWS_AS(build_cf({{5}}, {0}, 2), Error);
}

TEST_CASE("fixture confusability reflects the single split token") {
  Fixture fx;
  const auto res = analyze_ambiguity(fx.crowd, fx.lengths, fx.cluster, 0, fx.truth, 3,
                                     {0.2, true});
  // Only flat 9 (truth 1) carries an extra candidate (2); four tokens have
  // truth 1, so the directed rate is 1/4 and the symmetrized value half that.
  CHECK(res.cf(1, 2) == doctest::Approx(0.125));
  CHECK(res.cf(2, 1) == doctest::Approx(0.125));
  CHECK(res.cf(0, 1) == 0.0);
  CHECK(res.cf(0, 2) == 0.0);
}

TEST_CASE("confusability files round trip through label names") {
  LabelSet abc;
  abc.intern("A");
  abc.intern("B");
  abc.intern("C");
  Matrix cf(3, 3);
  cf(0, 1) = cf(1, 0) = 0.25;
  cf(1, 2) = cf(2, 1) = 0.0625;

  TempDir dir("cf");
  write_cf(cf, abc, dir.file("cf.tsv"));

  LabelSet permuted;
  permuted.intern("B");
  permuted.intern("A");
  permuted.intern("D");
  permuted.intern("C");
  const auto loaded = load_cf(dir.file("cf.tsv"), permuted);
  CHECK(loaded(1, 0) == 0.25);  // A-B under the new ids
  CHECK(loaded(0, 3) == 0.0625);
  CHECK(loaded(2, 0) == 0.0);  // D has no stored pairs
  CHECK(loaded.rows() == 4);

  CHECK_THROWS_AS(write_cf(Matrix(2, 2), abc, dir.file("bad.tsv")), Error);
  testutil::write_text(dir.file("short.tsv"), "A\tB\n0\t0\n");
  CHECK_THROWS_AS(load_cf(dir.file("short.tsv"), abc), Error);
}

TEST_CASE("score and flag files round trip") {
  Fixture fx;
  const auto res = analyze_ambiguity(fx.crowd, fx.lengths, fx.cluster, 0, fx.truth, 3,
                                     {0.2, true});
  LabelSet labels;
  labels.intern("zero");
  labels.intern("one");
  labels.intern("two");

  TempDir dir("amb");
  write_mu(res, fx.lengths, dir.file("mu.tsv"));
  const auto mu_lines = testutil::read_text(dir.file("mu.tsv"));
  CHECK(std::count(mu_lines.begin(), mu_lines.end(), '\n') == 10);  // eligible rows only

  write_flagged(res, fx.lengths, dir.file("flagged.tsv"));
  const auto flags = load_flagged(dir.file("flagged.tsv"));
  CHECK(flags == std::vector<std::pair<int, int>>{{0, 0}, {1, 4}});

  write_candidates(res, fx.lengths, labels, dir.file("cand.tsv"));
  LabelSet seen;
  const auto cands = load_candidates(dir.file("cand.tsv"), seen);
  REQUIRE(cands.size() == 2);
  CHECK(std::get<0>(cands[1]) == 1);
  CHECK(std::get<1>(cands[1]) == 4);
  REQUIRE(std::get<2>(cands[1]).size() == 2);
  CHECK(seen.name(std::get<2>(cands[1])[0]) == "one");
  CHECK(seen.name(std::get<2>(cands[1])[1]) == "two");
  CHECK(std::get<2>(cands[0]) == std::vector<int>{seen.find("zero").value()});

  testutil::write_text(dir.file("bad.tsv"), "0\t0\tA\n");
  CHECK_THROWS_AS(load_candidates(dir.file("bad.tsv"), seen), ParseError);
}

}  // TEST_SUITE
