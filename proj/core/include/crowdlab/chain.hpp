#ifndef CROWDLAB_CHAIN_HPP_
#define CROWDLAB_CHAIN_HPP_

#include <cstdint>
#include <utility>
#include <vector>

#include "crowdlab/crowd.hpp"
#include "crowdlab/matrix.hpp"
#include "crowdlab/sampler.hpp"

namespace crowdlab {

struct ChainSchedule {
  int burn_in = 200;
  int num_samples = 300;
  int thin = 2;
  int mh_inner_steps = 20;
  MhMode mh_mode = MhMode::kPlain;

  int total_sweeps() const { return burn_in + num_samples * thin; }
  void validate() const;
};

struct ChainDiagnostics {
  int sweeps = 0;
  int retained_samples = 0;
  double beta_acceptance = 0.0;
  double eta_acceptance = 0.0;
  std::vector<double> log_likelihood;  // one entry per sweep
};

struct AggregationResult {
  std::vector<int> truth;    // posterior-mode truth per flat token
  std::vector<int> cluster;  // posterior-mode cluster per annotator

  // Shared confusion matrix per cluster: row t, column s is the fraction of
  // truth-t tokens on which every member of the cluster annotated and all of
  // them chose s. Rows may sum to less than 1.
  std::vector<Matrix> confusion;
  std::vector<bool> cluster_empty;
  int reliable_cluster = -1;

  // Posterior means of the cluster parameters over retained samples.
  std::vector<Matrix> beta_mean;
  std::vector<std::vector<double>> eta_mean;

  ChainDiagnostics diagnostics;
};

// Runs one Gibbs chain and summarizes it. Truth and cluster estimates are
// per-site posterior modes over the retained samples; ties break to the
// smallest id.
AggregationResult run_chain(const CrowdAnnotations& crowd, const Hyperparams& hyper,
                            const ChainSchedule& schedule, std::uint64_t seed,
                            const std::vector<std::uint64_t>* annotator_streams = nullptr);

// Unanimity confusion of each cluster at fixed assignments (see
// AggregationResult::confusion). `cluster_empty`, when given, flags clusters
// with no members; their matrices are all zero.
std::vector<Matrix> shared_confusion(const CrowdAnnotations& crowd,
                                     const std::vector<int>& truth,
                                     const std::vector<int>& cluster, int num_clusters,
                                     int num_labels,
                                     std::vector<bool>* cluster_empty = nullptr);

// Cluster with the highest mean diagonal; ties break to the smallest id.
int pick_reliable_cluster(const std::vector<Matrix>& confusion);

struct ModelSelection {
  int chosen = -1;
  std::vector<int> candidates;
  std::vector<double> bic;
  AggregationResult result;  // the chain run at the chosen cluster count
};

// Runs one chain per candidate cluster count (concurrently) and picks the
// count minimizing BIC = -2 log p(Y | estimates) + k log(#annotations) with
// k = C*T*(T-1) + C*T free cluster parameters. Likelihood is evaluated at the
// posterior-mode assignments and posterior-mean (eta, beta).
ModelSelection select_model(const CrowdAnnotations& crowd, const Hyperparams& base,
                            int min_clusters, int max_clusters,
                            const ChainSchedule& schedule, std::uint64_t seed);

// log p(Y | z, c, eta, beta) at explicit values; counts are rebuilt from the
// given assignments.
double annotation_log_likelihood_at(const CrowdAnnotations& crowd,
                                    const std::vector<int>& truth,
                                    const std::vector<int>& cluster,
                                    const std::vector<std::vector<double>>& eta,
                                    const std::vector<Matrix>& beta, int num_labels);

// annotator_id \t cluster, one row per annotator, ids dense from 0.
void write_clusters(const std::vector<int>& cluster, const std::string& path);
std::vector<int> load_clusters(const std::string& path);

}  // namespace crowdlab

#endif  // CROWDLAB_CHAIN_HPP_
