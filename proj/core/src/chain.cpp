#include "crowdlab/chain.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

#include "crowdlab/error.hpp"
#include "crowdlab/rng.hpp"
#include "numeric.hpp"
#include "tsv.hpp"

namespace crowdlab {

void ChainSchedule::validate() const {
  if (burn_in < 0) throw Error("burn_in must be >= 0");
  if (num_samples < 1) throw Error("num_samples must be >= 1");
  if (thin < 1) throw Error("thin must be >= 1");
  if (mh_inner_steps < 0) throw Error("mh_inner_steps must be >= 0");
}

AggregationResult run_chain(const CrowdAnnotations& crowd, const Hyperparams& hyper,
                            const ChainSchedule& schedule, std::uint64_t seed,
                            const std::vector<std::uint64_t>* annotator_streams) {
  schedule.validate();
  SamplerState state(crowd, hyper, seed, annotator_streams);
  const int T = state.num_labels();
  const int C = state.num_clusters();
  const int L = state.num_annotators();
  const std::size_t N = state.num_tokens();

  std::vector<int> truth_votes(N * static_cast<std::size_t>(T), 0);
  std::vector<int> cluster_votes(static_cast<std::size_t>(L) * static_cast<std::size_t>(C), 0);
  std::vector<Matrix> beta_sum(static_cast<std::size_t>(C),
                               Matrix(static_cast<std::size_t>(T), static_cast<std::size_t>(T)));
  std::vector<std::vector<double>> eta_sum(static_cast<std::size_t>(C),
                                           std::vector<double>(static_cast<std::size_t>(T), 0.0));

  AggregationResult out;
  out.diagnostics.sweeps = schedule.total_sweeps();
  out.diagnostics.log_likelihood.reserve(static_cast<std::size_t>(schedule.total_sweeps()));

  int retained = 0;
  for (int s = 0; s < schedule.total_sweeps(); ++s) {
    state.sweep(seed, static_cast<std::uint64_t>(s), schedule.mh_inner_steps, schedule.mh_mode);
    out.diagnostics.log_likelihood.push_back(state.annotation_log_likelihood());
    if (s < schedule.burn_in) continue;
    if ((s - schedule.burn_in) % schedule.thin != schedule.thin - 1) continue;
    ++retained;
    for (std::size_t i = 0; i < N; ++i)
      ++truth_votes[i * static_cast<std::size_t>(T) + static_cast<std::size_t>(state.truth()[i])];
    for (int l = 0; l < L; ++l)
      ++cluster_votes[static_cast<std::size_t>(l) * static_cast<std::size_t>(C) +
                      static_cast<std::size_t>(state.cluster()[l])];
    for (int c = 0; c < C; ++c) {
      const Matrix& b = state.beta(c);
      for (std::size_t k = 0; k < b.data().size(); ++k)
        beta_sum[static_cast<std::size_t>(c)].data()[k] += b.data()[k];
      for (int t = 0; t < T; ++t)
        eta_sum[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)] += state.eta(c, t);
    }
  }
  out.diagnostics.retained_samples = retained;
  out.diagnostics.beta_acceptance = state.beta_stats().rate();
  out.diagnostics.eta_acceptance = state.eta_stats().rate();

  out.truth.assign(N, 0);
  for (std::size_t i = 0; i < N; ++i) {
    int best = 0;
    for (int t = 1; t < T; ++t)
      if (truth_votes[i * static_cast<std::size_t>(T) + static_cast<std::size_t>(t)] >
          truth_votes[i * static_cast<std::size_t>(T) + static_cast<std::size_t>(best)])
        best = t;
    out.truth[i] = best;
  }
  out.cluster.assign(static_cast<std::size_t>(L), 0);
  for (int l = 0; l < L; ++l) {
    int best = 0;
    for (int c = 1; c < C; ++c)
      if (cluster_votes[static_cast<std::size_t>(l) * static_cast<std::size_t>(C) +
                        static_cast<std::size_t>(c)] >
          cluster_votes[static_cast<std::size_t>(l) * static_cast<std::size_t>(C) +
                        static_cast<std::size_t>(best)])
        best = c;
    out.cluster[static_cast<std::size_t>(l)] = best;
  }

  out.beta_mean = std::move(beta_sum);
  out.eta_mean = std::move(eta_sum);
  for (int c = 0; c < C; ++c) {
    for (auto& v : out.beta_mean[static_cast<std::size_t>(c)].data()) v /= retained;
    for (auto& v : out.eta_mean[static_cast<std::size_t>(c)]) v /= retained;
  }

  out.confusion = shared_confusion(crowd, out.truth, out.cluster, C, T, &out.cluster_empty);
  out.reliable_cluster = pick_reliable_cluster(out.confusion);
  return out;
}

std::vector<Matrix> shared_confusion(const CrowdAnnotations& crowd,
                                     const std::vector<int>& truth,
                                     const std::vector<int>& cluster, int num_clusters,
                                     int num_labels, std::vector<bool>* cluster_empty) {
  if (truth.size() != crowd.num_tokens())
    throw Error("truth vector does not match token count");
  if (cluster.size() != static_cast<std::size_t>(crowd.num_annotators()))
    throw Error("cluster vector does not match annotator count");

  std::vector<int> members(static_cast<std::size_t>(num_clusters), 0);
  for (int c : cluster) {
    if (c < 0 || c >= num_clusters) throw Error("cluster id out of range");
    ++members[static_cast<std::size_t>(c)];
  }
  if (cluster_empty != nullptr) {
    cluster_empty->assign(static_cast<std::size_t>(num_clusters), false);
    for (int c = 0; c < num_clusters; ++c)
      (*cluster_empty)[static_cast<std::size_t>(c)] = members[static_cast<std::size_t>(c)] == 0;
  }

  std::vector<Matrix> numer(static_cast<std::size_t>(num_clusters),
                            Matrix(static_cast<std::size_t>(num_labels),
                                   static_cast<std::size_t>(num_labels)));
  std::vector<std::vector<double>> denom(
      static_cast<std::size_t>(num_clusters),
      std::vector<double>(static_cast<std::size_t>(num_labels), 0.0));

  for (std::size_t i = 0; i < crowd.num_tokens(); ++i) {
    const int t = truth[i];
    if (t < 0 || t >= num_labels) throw Error("truth label out of range");
    // Per cluster: how many members labeled this token, and whether they all
    // agreed on one label.
    for (int c = 0; c < num_clusters; ++c) {
      if (members[static_cast<std::size_t>(c)] == 0) continue;
      denom[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)] += 1.0;
    }
    std::vector<int> seen(static_cast<std::size_t>(num_clusters), 0);
    std::vector<int> agreed(static_cast<std::size_t>(num_clusters), -2);  // -2 none, -1 conflict
    for (const auto& [l, s] : crowd.by_token()[i]) {
      const int c = cluster[static_cast<std::size_t>(l)];
      ++seen[static_cast<std::size_t>(c)];
      auto& a = agreed[static_cast<std::size_t>(c)];
      if (a == -2) a = s;
      else if (a != s) a = -1;
    }
    for (int c = 0; c < num_clusters; ++c) {
      if (members[static_cast<std::size_t>(c)] == 0) continue;
      if (seen[static_cast<std::size_t>(c)] != members[static_cast<std::size_t>(c)]) continue;
      const int a = agreed[static_cast<std::size_t>(c)];
      if (a >= 0)
        numer[static_cast<std::size_t>(c)](static_cast<std::size_t>(t),
                                           static_cast<std::size_t>(a)) += 1.0;
    }
  }

  for (int c = 0; c < num_clusters; ++c) {
    for (int t = 0; t < num_labels; ++t) {
      const double d = denom[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)];
      if (d == 0.0) continue;
      for (int s = 0; s < num_labels; ++s)
        numer[static_cast<std::size_t>(c)](static_cast<std::size_t>(t),
                                           static_cast<std::size_t>(s)) /= d;
    }
  }
  return numer;
}

int pick_reliable_cluster(const std::vector<Matrix>& confusion) {
  if (confusion.empty()) throw Error("no clusters");
  int best = 0;
  double best_diag = -1.0;
  for (std::size_t c = 0; c < confusion.size(); ++c) {
    const Matrix& m = confusion[c];
    double diag = 0.0;
    for (std::size_t t = 0; t < m.rows(); ++t) diag += m(t, t);
    diag /= static_cast<double>(m.rows());
    if (diag > best_diag) {
      best_diag = diag;
      best = static_cast<int>(c);
    }
  }
  return best;
}

double annotation_log_likelihood_at(const CrowdAnnotations& crowd,
                                    const std::vector<int>& truth,
                                    const std::vector<int>& cluster,
                                    const std::vector<std::vector<double>>& eta,
                                    const std::vector<Matrix>& beta, int num_labels) {
  using numeric::log_gamma;
  const int L = crowd.num_annotators();
  const int T = num_labels;
  std::vector<int> n_lt(static_cast<std::size_t>(L) * static_cast<std::size_t>(T), 0);
  std::vector<int> n_lts(static_cast<std::size_t>(L) * static_cast<std::size_t>(T) *
                             static_cast<std::size_t>(T),
                         0);
  for (std::size_t i = 0; i < crowd.num_tokens(); ++i) {
    const int t = truth[i];
    for (const auto& [l, s] : crowd.by_token()[i]) {
      ++n_lt[static_cast<std::size_t>(l) * static_cast<std::size_t>(T) +
             static_cast<std::size_t>(t)];
      ++n_lts[(static_cast<std::size_t>(l) * static_cast<std::size_t>(T) +
               static_cast<std::size_t>(t)) * static_cast<std::size_t>(T) +
              static_cast<std::size_t>(s)];
    }
  }
  double out = 0.0;
  for (int l = 0; l < L; ++l) {
    const int cl = cluster[static_cast<std::size_t>(l)];
    const Matrix& b = beta[static_cast<std::size_t>(cl)];
    for (int t = 0; t < T; ++t) {
      const int nlt = n_lt[static_cast<std::size_t>(l) * static_cast<std::size_t>(T) +
                           static_cast<std::size_t>(t)];
      if (nlt == 0) continue;
      const double e = eta[static_cast<std::size_t>(cl)][static_cast<std::size_t>(t)];
      out += log_gamma(e) - log_gamma(static_cast<double>(nlt) + e);
      for (int j = 0; j < T; ++j) {
        const int nlts = n_lts[(static_cast<std::size_t>(l) * static_cast<std::size_t>(T) +
                                static_cast<std::size_t>(t)) * static_cast<std::size_t>(T) +
                               static_cast<std::size_t>(j)];
        if (nlts == 0) continue;
        const double eb = e * b(static_cast<std::size_t>(t), static_cast<std::size_t>(j));
        out += log_gamma(static_cast<double>(nlts) + eb) - log_gamma(eb);
      }
    }
  }
  return out;
}

ModelSelection select_model(const CrowdAnnotations& crowd, const Hyperparams& base,
                            int min_clusters, int max_clusters,
                            const ChainSchedule& schedule, std::uint64_t seed) {
  if (min_clusters < 1 || max_clusters < min_clusters)
    throw Error("invalid cluster count range");
  schedule.validate();

  const int T = static_cast<int>(base.lambda.size());
  std::vector<int> candidates;
  for (int c = min_clusters; c <= max_clusters; ++c) candidates.push_back(c);

  std::vector<std::future<AggregationResult>> futures;
  futures.reserve(candidates.size());
  for (int c : candidates) {
    Hyperparams hyper = base;
    hyper.num_clusters = c;
    // Independent seed per candidate so chains do not share streams.
    const std::uint64_t chain_seed =
        Philox4x64::block({seed, 0x5e1ec7u}, {static_cast<std::uint64_t>(c), 0, 0, 0})[0];
    futures.push_back(std::async(std::launch::async, [&crowd, hyper, schedule, chain_seed]() {
      return run_chain(crowd, hyper, schedule, chain_seed);
    }));
  }

  ModelSelection out;
  out.candidates = candidates;
  out.bic.resize(candidates.size());
  std::vector<AggregationResult> results;
  results.reserve(candidates.size());
  for (auto& f : futures) results.push_back(f.get());

  const double log_m = std::log(static_cast<double>(crowd.size()));
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const int c = candidates[k];
    const double ll = annotation_log_likelihood_at(crowd, results[k].truth, results[k].cluster,
                                                   results[k].eta_mean, results[k].beta_mean, T);
    const double free_params = static_cast<double>(c) * T * (T - 1) + static_cast<double>(c) * T;
    out.bic[k] = -2.0 * ll + free_params * log_m;
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < candidates.size(); ++k)
    if (out.bic[k] < out.bic[best]) best = k;
  out.chosen = candidates[best];
  out.result = std::move(results[best]);
  return out;
}

void write_clusters(const std::vector<int>& cluster, const std::string& path) {
  std::ostringstream out;
  for (std::size_t a = 0; a < cluster.size(); ++a) out << a << '\t' << cluster[a] << '\n';
  tsv::write_file(path, out.str());
}

std::vector<int> load_clusters(const std::string& path) {
  std::vector<int> out;
  const auto all = tsv::lines(tsv::read_file(path));
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].empty()) continue;
    const auto cols = tsv::fields(all[i]);
    if (cols.size() != 2) throw ParseError(path, i + 1, "expected 2 columns");
    const auto id = tsv::parse_int(cols[0], path, i + 1);
    if (id != static_cast<long>(out.size()))
      throw ParseError(path, i + 1, "annotator ids must be dense from 0");
    const auto c = tsv::parse_int(cols[1], path, i + 1);
    if (c < 0) throw ParseError(path, i + 1, "negative cluster id");
    out.push_back(static_cast<int>(c));
  }
  if (out.empty()) throw Error("empty cluster file: " + path);
  return out;
}

}  // namespace crowdlab
