#include <doctest.h>

#include <cmath>
#include <vector>

#include "crowdlab/error.hpp"
#include "crowdlab/sampler.hpp"
#include "stat_util.hpp"
#include "test_util.hpp"

using namespace crowdlab;
using testutil::GridCdf;
using testutil::batch_means_se;
using testutil::ks_stat;
using testutil::make_corpus;
using testutil::make_crowd;

namespace {

// Two-label, one-token, one-annotator setup: with two clusters one of them
// has no members, so its parameter moves see only the prior.
struct EmptyClusterFixture {
  Corpus corpus = make_corpus(1, 1, 2);
  CrowdAnnotations crowd = make_crowd(corpus, 1, 1.0, 1);
  Hyperparams hyper;
  SamplerState state;
  int empty;

  explicit EmptyClusterFixture(double lambda)
      : hyper(make_hyper(lambda)), state(crowd, hyper, 17), empty(find_empty(state)) {}

  static Hyperparams make_hyper(double lambda) {
    auto h = Hyperparams::defaults(2, 2);
    h.lambda = {lambda, lambda};
    return h;
  }
  static int find_empty(const SamplerState& s) {
    REQUIRE(s.cluster_counts()[0] + s.cluster_counts()[1] == 1);
    return s.cluster_counts()[0] == 0 ? 0 : 1;
  }
};

std::vector<double> collect_eta(SamplerState& state, int c, int t, MhMode mode, int burn,
                                int keep, RngStream& rng) {
  for (int i = 0; i < burn; ++i) state.refresh_eta(c, t, 1, mode, rng);
  std::vector<double> xs;
  xs.reserve(static_cast<std::size_t>(keep));
  for (int i = 0; i < keep; ++i) {
    state.refresh_eta(c, t, 1, mode, rng);
    xs.push_back(state.eta(c, t));
  }
  return xs;
}

}  // namespace

TEST_SUITE("mh") {

TEST_CASE("corrected concentration chain recovers its exponential prior") {
  for (double lambda : {0.5, 2.0, 5.0}) {
    CAPTURE(lambda);
    EmptyClusterFixture fx(lambda);
    RngStream rng(23, 0x100, static_cast<std::uint64_t>(lambda * 10));
    const auto xs = collect_eta(fx.state, fx.empty, 0, MhMode::kCorrected, 2000, 30000, rng);
    const double se = batch_means_se(xs);
    CHECK(std::abs(testutil::mean(xs) - 1.0 / lambda) < 3.0 * se);
  }
}

TEST_CASE("corrected confusion chain recovers its beta prior") {
  EmptyClusterFixture fx(2.0);
  // With two labels the off-diagonal entry plus the diagonal is always 1, so
  // the within-row move samples v = beta_01 itself, Beta(l*a01, l*a00).
  const double a_off = 2.0 * 0.3;
  const double a_diag = 2.0 * 0.7;
  GridCdf cdf([&](double v) { return (a_off - 1.0) * std::log(v) + (a_diag - 1.0) * std::log1p(-v); },
              0.0, 1.0, 100000);

  RngStream rng(29, 0x101, 0);
  for (int i = 0; i < 2000; ++i) fx.state.refresh_beta(fx.empty, 0, 1, 1, MhMode::kCorrected, rng);
  std::vector<double> xs;
  for (int i = 0; i < 30000; ++i) {
    fx.state.refresh_beta(fx.empty, 0, 1, 1, MhMode::kCorrected, rng);
    xs.push_back(fx.state.beta(fx.empty)(0, 1));
  }
  CHECK(ks_stat(xs, cdf) < 0.03);
  for (double x : xs) {
    REQUIRE(x > 0.0);
    REQUIRE(x < 1.0);
  }
  // The row stays on the simplex throughout.
  CHECK(fx.state.beta(fx.empty)(0, 0) + fx.state.beta(fx.empty)(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("concentration chain with data matches quadrature") {
  const auto corpus = make_corpus(3, 3, 2);
  const auto crowd = make_crowd(corpus, 2, 0.7, 3);
  auto hyper = Hyperparams::defaults(2, 1);
  SamplerState state(crowd, hyper, 31);

  // Reconstruct the conditional density of eta[0][0] from public counts;
  // assignments do not move during parameter refreshes.
  const double lam = hyper.lambda[0];
  const int L = state.num_annotators();
  auto log_target = [&](double x) {
    double s = std::log(lam) - lam * x;
    for (int l = 0; l < L; ++l) {
      const int nlt = state.annotator_truth_count(l, 0);
      s += std::lgamma(x) - std::lgamma(nlt + x);
      for (int j = 0; j < 2; ++j) {
        const int nlts = state.annotator_label_count(l, 0, j);
        const double xb = x * state.beta(0)(0, static_cast<std::size_t>(j));
        s += std::lgamma(nlts + xb) - std::lgamma(xb);
      }
    }
    return s;
  };
  GridCdf grid(log_target, 0.0, 60.0, 200000);
  const double want = grid.mean_of(log_target);

  RngStream rng(37, 0x102, 0);
  const auto xs = collect_eta(state, 0, 0, MhMode::kCorrected, 5000, 60000, rng);
  const double se = batch_means_se(xs);
  CHECK(std::abs(testutil::mean(xs) - want) < 4.0 * se);
}

TEST_CASE("every step consumes exactly two uniforms") {
  EmptyClusterFixture fx(2.0);
  for (auto mode : {MhMode::kPlain, MhMode::kCorrected}) {
    RngStream used(41, 0x103, 7);
    fx.state.refresh_eta(fx.empty, 0, 9, mode, used);
    RngStream manual(41, 0x103, 7);
    for (int i = 0; i < 18; ++i) manual.next_double();
    CHECK(used.next_u64() == manual.next_u64());

    RngStream used_b(41, 0x104, 7);
    fx.state.refresh_beta(fx.empty, 0, 1, 9, mode, used_b);
    RngStream manual_b(41, 0x104, 7);
    for (int i = 0; i < 18; ++i) manual_b.next_double();
    CHECK(used_b.next_u64() == manual_b.next_u64());
  }
}

TEST_CASE("one call of many steps equals many calls of one step") {
  EmptyClusterFixture a(2.0);
  EmptyClusterFixture b(2.0);
  RngStream ra(43, 0x105, 0);
  RngStream rb(43, 0x105, 0);
  a.state.refresh_eta(a.empty, 1, 25, MhMode::kCorrected, ra);
  for (int i = 0; i < 25; ++i) b.state.refresh_eta(b.empty, 1, 1, MhMode::kCorrected, rb);
  CHECK(a.state.eta(a.empty, 1) == b.state.eta(b.empty, 1));

  RngStream ra2(43, 0x106, 0);
  RngStream rb2(43, 0x106, 0);
  a.state.refresh_beta(a.empty, 1, 0, 25, MhMode::kCorrected, ra2);
  for (int i = 0; i < 25; ++i) b.state.refresh_beta(b.empty, 1, 0, 1, MhMode::kCorrected, rb2);
  CHECK(a.state.beta(a.empty)(1, 0) == b.state.beta(b.empty)(1, 0));
}

TEST_CASE("acceptance statistics count proposals faithfully") {
  EmptyClusterFixture fx(2.0);
  fx.state.reset_stats();
  RngStream rng(47, 0x107, 0);
  fx.state.refresh_eta(fx.empty, 0, 500, MhMode::kPlain, rng);
  CHECK(fx.state.eta_stats().proposed == 500);
  CHECK(fx.state.eta_stats().accepted <= 500);
  CHECK(fx.state.eta_stats().accepted > 0);
  CHECK(fx.state.beta_stats().proposed == 0);

  fx.state.refresh_beta(fx.empty, 0, 1, 300, MhMode::kPlain, rng);
  CHECK(fx.state.beta_stats().proposed == 300);
  CHECK(fx.state.beta_stats().accepted <= 300);

  fx.state.reset_stats();
  CHECK(fx.state.eta_stats().proposed == 0);
  CHECK(fx.state.beta_stats().rate() == 0.0);
}

TEST_CASE("plain mode stays positive and keeps the row normalized") {
  EmptyClusterFixture fx(0.5);
  RngStream rng(53, 0x108, 0);
  for (int i = 0; i < 5000; ++i) {
    fx.state.refresh_eta(fx.empty, 0, 1, MhMode::kPlain, rng);
    REQUIRE(fx.state.eta(fx.empty, 0) > 0.0);
    fx.state.refresh_beta(fx.empty, 0, 1, 1, MhMode::kPlain, rng);
    const double b01 = fx.state.beta(fx.empty)(0, 1);
    REQUIRE(b01 > 0.0);
    REQUIRE(fx.state.beta(fx.empty)(0, 0) + b01 == doctest::Approx(1.0));
  }
}

TEST_CASE("beta refresh rejects diagonal targets") {
  EmptyClusterFixture fx(2.0);
  RngStream rng(59, 0x109, 0);
  CHECK_THROWS_AS(fx.state.refresh_beta(0, 1, 1, 1, MhMode::kPlain, rng), Error);
}

}  // TEST_SUITE
