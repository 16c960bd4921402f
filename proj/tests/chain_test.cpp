#include <doctest.h>

#include <cstdint>
#include <vector>

#include "crowdlab/chain.hpp"
#include "crowdlab/error.hpp"
#include "crowdlab/sampler.hpp"
#include "crowdlab/simulate.hpp"
#include "test_util.hpp"

using namespace crowdlab;
using testutil::make_corpus;
using testutil::make_crowd;

namespace {

std::vector<int> flat_gold(const Corpus& corpus) {
  std::vector<int> out;
  for (const auto& seq : corpus.sequences)
    for (const auto& tok : seq.tokens) out.push_back(tok.gold[0]);
  return out;
}

ChainSchedule short_schedule(int burn, int samples) {
  ChainSchedule s;
  s.burn_in = burn;
  s.num_samples = samples;
  s.thin = 2;
  s.mh_inner_steps = 10;
  s.mh_mode = MhMode::kCorrected;
  return s;
}

}  // namespace

TEST_SUITE("chain") {

TEST_CASE("unanimity confusion counts full agreement only") {
  // Two-member cluster 0 {a0, a1}, singleton cluster 1 {a2}, cluster 2 empty.
  // Position 4 is covered by a0 alone: it lands in every denominator but no
  // numerator, so rows may sum to less than 1.
  const std::vector<Annotation> entries{
      {0, 0, 0, 0}, {0, 0, 1, 0}, {0, 0, 2, 0},  // unanimous 0 everywhere
      {0, 1, 0, 0}, {0, 1, 1, 1}, {0, 1, 2, 1},  // cluster 0 splits
      {0, 2, 0, 1}, {0, 2, 1, 1}, {0, 2, 2, 1},  // unanimous 1 everywhere
      {0, 3, 0, 0}, {0, 3, 1, 1}, {0, 3, 2, 1},  // cluster 0 splits again
      {0, 4, 0, 0},                               // a0 only
  };
  const auto crowd = CrowdAnnotations::build(entries, {5}, 3);
  const std::vector<int> truth{0, 0, 1, 1, 0};
  const std::vector<int> cluster{0, 0, 1};

  std::vector<bool> empty;
  const auto m = shared_confusion(crowd, truth, cluster, 3, 2, &empty);
  REQUIRE(m.size() == 3);
  CHECK(empty == std::vector<bool>{false, false, true});

  // Cluster 0: of three truth-0 tokens only position 0 is unanimous; of two
  // truth-1 tokens only position 2.
  CHECK(m[0](0, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(m[0](0, 1) == doctest::Approx(0.0));
  CHECK(m[0](1, 1) == doctest::Approx(0.5));
  CHECK(m[0](1, 0) == doctest::Approx(0.0));

  // The singleton is unanimous wherever it labels at all; position 4 still
  // dilutes its truth-0 row.
  CHECK(m[1](0, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(m[1](0, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(m[1](1, 1) == doctest::Approx(1.0));

  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK(m[2](i, j) == 0.0);

  // Mean diagonals 5/12 vs 2/3: the singleton wins.
  CHECK(pick_reliable_cluster(m) == 1);
}

TEST_CASE("diagonal argmax identifies the high-precision group") {
  // At the simulated group assignment the unanimity diagonal of the
  // high-precision group dominates the other groups' (roughly the product of
  // member precisions: 0.8^8 vs 0.55^4 vs 0.25^3, and 0.8^5 vs 0.55^5 vs
  // 0.25^5), so the argmax should find it in essentially every seed.
  const Corpus corpus = make_corpus(150, 8, 12);
  const auto gold = flat_gold(corpus);
  const auto ranges = parse_precision_ranges("0.9:0.7,0.7:0.4,0.4:0.1");
  for (const char* groups : {"8,4,3", "5,5,5"}) {
    const auto counts = parse_group_counts(groups);
    std::vector<int> assignment;
    for (std::size_t g = 0; g < counts.size(); ++g)
      assignment.insert(assignment.end(), static_cast<std::size_t>(counts[g]),
                        static_cast<int>(g));
    int hits = 0;
    for (std::uint64_t seed = 500; seed < 520; ++seed) {
      const auto sim = simulate(corpus, make_plan(counts, ranges, seed));
      const auto m = shared_confusion(sim.crowd, gold, assignment, 3, 12);
      hits += pick_reliable_cluster(m) == 0;
    }
    CAPTURE(groups);
    CHECK(hits >= 19);
  }
}

TEST_CASE("model selection recovers two well-separated regimes") {
  const Corpus corpus = make_corpus(60, 6, 12);
  const auto counts = parse_group_counts("4,4");
  const auto ranges = parse_precision_ranges("0.97:0.93,0.08:0.03");
  for (std::uint64_t seed = 100; seed < 103; ++seed) {
    const auto sim = simulate(corpus, make_plan(counts, ranges, seed));
    const auto ms = select_model(sim.crowd, Hyperparams::defaults(12, 2), 2, 4,
                                 short_schedule(40, 40), seed);
    CHECK(ms.chosen == 2);
    REQUIRE(ms.result.cluster.size() == 8);
    // The partition matches the regimes exactly, whatever the labels.
    for (int l = 1; l < 4; ++l) CHECK(ms.result.cluster[static_cast<std::size_t>(l)] ==
                                      ms.result.cluster[0]);
    for (int l = 5; l < 8; ++l) CHECK(ms.result.cluster[static_cast<std::size_t>(l)] ==
                                      ms.result.cluster[4]);
    CHECK(ms.result.cluster[0] != ms.result.cluster[4]);
  }
}

TEST_CASE("cluster count range of one is returned unchanged") {
  const Corpus corpus = make_corpus(6, 4, 4);
  const auto crowd = make_crowd(corpus, 3, 0.7, 9);
  const auto ms = select_model(crowd, Hyperparams::defaults(4, 3), 3, 3,
                               short_schedule(5, 5), 42);
  CHECK(ms.chosen == 3);
  CHECK(ms.candidates == std::vector<int>{3});
  CHECK(ms.bic.size() == 1);
}

TEST_CASE("single-annotator data selects the smallest count") {
  // One annotator fills one cluster no matter how many exist; the likelihood
  // term barely moves across candidates while the parameter penalty grows
  // linearly, so BIC must be increasing in the count.
  const Corpus corpus = make_corpus(10, 5, 4);
  const auto crowd = make_crowd(corpus, 1, 0.7, 7);
  const auto ms = select_model(crowd, Hyperparams::defaults(4, 1), 1, 3,
                               short_schedule(10, 10), 7);
  CHECK(ms.chosen == 1);
  REQUIRE(ms.bic.size() == 3);
  CHECK(ms.bic[0] < ms.bic[1]);
  CHECK(ms.bic[1] < ms.bic[2]);
}

TEST_CASE("chain summaries are reproducible for a fixed seed") {
  const Corpus corpus = make_corpus(8, 5, 4);
  const auto crowd = make_crowd(corpus, 4, 0.6, 3);
  const auto schedule = short_schedule(10, 15);
  const auto a = run_chain(crowd, Hyperparams::defaults(4, 2), schedule, 77);
  const auto b = run_chain(crowd, Hyperparams::defaults(4, 2), schedule, 77);
  CHECK(a.truth == b.truth);
  CHECK(a.cluster == b.cluster);
  CHECK(a.reliable_cluster == b.reliable_cluster);
  for (int c = 0; c < 2; ++c) {
    CHECK(a.beta_mean[static_cast<std::size_t>(c)].data() ==
          b.beta_mean[static_cast<std::size_t>(c)].data());
    CHECK(a.eta_mean[static_cast<std::size_t>(c)] == b.eta_mean[static_cast<std::size_t>(c)]);
  }
  CHECK(a.diagnostics.retained_samples == 15);
  CHECK(a.diagnostics.log_likelihood.size() ==
        static_cast<std::size_t>(schedule.total_sweeps()));
}

}  // TEST_SUITE
