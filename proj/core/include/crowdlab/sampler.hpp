#ifndef CROWDLAB_SAMPLER_HPP_
#define CROWDLAB_SAMPLER_HPP_

#include <cstdint>
#include <vector>

#include "crowdlab/crowd.hpp"
#include "crowdlab/matrix.hpp"
#include "crowdlab/rng.hpp"

namespace crowdlab {

// Priors for the annotator-cluster model. Per truth label t: the cluster
// concentration eta_t^c is Exponential(lambda[t]) and the cluster confusion
// row beta_t^c is Dirichlet(lambda[t] * alpha row t). eps_nu / eps_gamma are
// the symmetric Dirichlet masses on cluster and truth proportions.
struct Hyperparams {
  int num_clusters = 2;
  std::vector<double> lambda;
  Matrix alpha;
  double eps_nu = 1.0;
  double eps_gamma = 1.0;

  // lambda_t = 2, alpha diagonal 0.7 / off-diagonal 0.3.
  static Hyperparams defaults(int num_labels, int num_clusters);
  void validate(int num_labels) const;
};

// kPlain treats the uniform-window proposal as symmetric (no Hastings
// correction). kCorrected adds the exact correction for the asymmetric
// window, and removes the cap at 1 for the concentration proposal, making
// the kernels properly invariant for their targets.
enum class MhMode { kPlain, kCorrected };

struct MhStats {
  std::uint64_t proposed = 0;
  std::uint64_t accepted = 0;

  double rate() const { return proposed == 0 ? 0.0 : static_cast<double>(accepted) / proposed; }
};

// Markov chain state for the collapsed model: per-token truth z, per-annotator
// cluster c, and per-cluster confusion parameters (eta, beta). Annotator
// emission parameters are integrated out; the count tables below are the
// sufficient statistics.
//
//   n_c[c]        annotators in cluster c
//   n_t[t]        tokens with truth t
//   n_lt[l][t]    tokens annotated by l whose truth is t
//   n_lts[l][t][s] of those, labeled s by l
//
// Counts are maintained incrementally by the samplers; recompute_counts()
// rebuilds them from scratch for consistency checks.
class SamplerState {
 public:
  // `annotator_streams` maps annotator id -> RNG stream id (default
  // identity). Cluster updates run in increasing stream-id order, so
  // relabeling annotators while carrying their stream ids permutes the
  // cluster trajectory without changing anything else.
  SamplerState(const CrowdAnnotations& crowd, const Hyperparams& hyper, std::uint64_t seed,
               const std::vector<std::uint64_t>* annotator_streams = nullptr);

  int num_labels() const { return T_; }
  int num_clusters() const { return C_; }
  int num_annotators() const { return L_; }
  std::size_t num_tokens() const { return N_; }

  const std::vector<int>& truth() const { return z_; }
  const std::vector<int>& cluster() const { return c_; }
  double eta(int c, int t) const { return eta_[idx_ct(c, t)]; }
  double& eta(int c, int t) { return eta_[idx_ct(c, t)]; }
  const Matrix& beta(int c) const { return beta_[static_cast<std::size_t>(c)]; }
  Matrix& beta(int c) { return beta_[static_cast<std::size_t>(c)]; }

  // Unnormalized log conditional of token i's truth given everything else,
  // with token i's own contribution removed from the counts.
  std::vector<double> truth_log_weights(std::size_t token) const;

  // Unnormalized log conditional of annotator l's cluster given everything
  // else, with l removed from the cluster occupancy counts.
  std::vector<double> cluster_log_weights(int annotator) const;

  void resample_truth(std::size_t token, RngStream& rng);
  void resample_cluster(int annotator, RngStream& rng);

  // `steps` Metropolis-Hastings updates of beta[c](t, j), j != t. The entry
  // moves inside (0, beta_tj + beta_tt); beta_tt absorbs the change so the
  // row stays on the simplex.
  void refresh_beta(int c, int t, int j, int steps, MhMode mode, RngStream& rng);

  // `steps` Metropolis-Hastings updates of eta[c][t].
  void refresh_eta(int c, int t, int steps, MhMode mode, RngStream& rng);

  // One full sweep: all truths, all clusters (stream-id order), then every
  // beta entry and every eta, `mh_steps` inner steps each.
  void sweep(std::uint64_t seed, std::uint64_t sweep_index, int mh_steps, MhMode mode);

  // log p(annotations | z, c, eta, beta) with annotator emissions integrated
  // out. Also the model-selection likelihood.
  double annotation_log_likelihood() const;

  // log p(c) + log p(z) under the collapsed symmetric Dirichlet priors.
  double assignment_log_prior() const;

  const MhStats& beta_stats() const { return beta_stats_; }
  const MhStats& eta_stats() const { return eta_stats_; }
  void reset_stats() { beta_stats_ = MhStats{}; eta_stats_ = MhStats{}; }

  // Count table accessors (tests verify incremental maintenance).
  const std::vector<int>& cluster_counts() const { return n_c_; }
  const std::vector<int>& truth_counts() const { return n_t_; }
  int annotator_truth_count(int l, int t) const { return n_lt_[idx_lt(l, t)]; }
  int annotator_label_count(int l, int t, int s) const { return n_lts_[idx_lts(l, t, s)]; }
  void recompute_counts();

  const std::vector<int>& cluster_update_order() const { return cluster_order_; }

 private:
  std::size_t idx_ct(int c, int t) const {
    return static_cast<std::size_t>(c) * static_cast<std::size_t>(T_) + static_cast<std::size_t>(t);
  }
  std::size_t idx_lt(int l, int t) const {
    return static_cast<std::size_t>(l) * static_cast<std::size_t>(T_) + static_cast<std::size_t>(t);
  }
  std::size_t idx_lts(int l, int t, int s) const {
    return (static_cast<std::size_t>(l) * static_cast<std::size_t>(T_) +
            static_cast<std::size_t>(t)) * static_cast<std::size_t>(T_) +
           static_cast<std::size_t>(s);
  }

  void add_token(std::size_t token, int t, int delta);
  double beta_log_target(int c, int t, int j, double x, double cap,
                         const std::vector<int>& nj, const std::vector<int>& ntt) const;
  double eta_log_target(int c, int t, double x, const std::vector<int>& members) const;

  const CrowdAnnotations* crowd_;
  Hyperparams hyper_;
  int T_;
  int C_;
  int L_;
  std::size_t N_;

  std::vector<int> z_;
  std::vector<int> c_;
  std::vector<double> eta_;    // C x T
  std::vector<Matrix> beta_;   // C of T x T

  std::vector<int> n_c_;
  std::vector<int> n_t_;
  std::vector<int> n_lt_;
  std::vector<int> n_lts_;

  std::vector<int> cluster_order_;  // annotators sorted by stream id
  std::vector<std::uint64_t> stream_of_;

  MhStats beta_stats_;
  MhStats eta_stats_;
};

// Majority vote per token over its annotations; ties break to the smallest
// label id. Also the baseline aggregator.
std::vector<int> majority_vote(const CrowdAnnotations& crowd, int num_labels);

}  // namespace crowdlab

#endif  // CROWDLAB_SAMPLER_HPP_
