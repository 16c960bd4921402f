#pragma once

// Independent reference implementations used by the unit and acceptance
// suites. Everything here is written directly from the model definitions,
// recomputing counts from raw data and enumerating assignment or label
// spaces outright, so agreement with the library is evidence rather than
// tautology. Nothing in this header is shared with library internals.

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "crowdlab/crf.hpp"
#include "crowdlab/crowd.hpp"
#include "crowdlab/matrix.hpp"

namespace oracle {

inline double logsumexp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

inline std::vector<double> softmax(const std::vector<double>& logw) {
  std::vector<double> p(logw.size());
  const double lz = logsumexp(logw);
  for (std::size_t i = 0; i < logw.size(); ++i) p[i] = std::exp(logw[i] - lz);
  return p;
}

// ---------------------------------------------------------------------------
// Annotator-cluster model: joint density over (z, c) with emissions
// integrated out, counts rebuilt from the raw annotation list every call.

struct ModelParams {
  std::vector<std::vector<double>> eta;  // [cluster][truth]
  std::vector<crowdlab::Matrix> beta;    // [cluster], T x T
  double eps_nu = 1.0;
  double eps_gamma = 1.0;
};

inline double annotation_ll(const crowdlab::CrowdAnnotations& crowd,
                            const std::vector<int>& z, const std::vector<int>& c,
                            const ModelParams& p) {
  const int L = crowd.num_annotators();
  const int T = static_cast<int>(p.eta.at(0).size());
  std::vector<std::vector<std::vector<int>>> n(
      static_cast<std::size_t>(L),
      std::vector<std::vector<int>>(static_cast<std::size_t>(T),
                                    std::vector<int>(static_cast<std::size_t>(T), 0)));
  for (std::size_t i = 0; i < crowd.num_tokens(); ++i)
    for (const auto& [l, s] : crowd.by_token()[i])
      ++n[static_cast<std::size_t>(l)][static_cast<std::size_t>(z[i])][static_cast<std::size_t>(s)];

  double total = 0.0;
  for (int l = 0; l < L; ++l) {
    const int cl = c[static_cast<std::size_t>(l)];
    for (int t = 0; t < T; ++t) {
      int nlt = 0;
      for (int s = 0; s < T; ++s) nlt += n[static_cast<std::size_t>(l)][static_cast<std::size_t>(t)][static_cast<std::size_t>(s)];
      const double e = p.eta[static_cast<std::size_t>(cl)][static_cast<std::size_t>(t)];
      total += std::lgamma(e) - std::lgamma(nlt + e);
      for (int s = 0; s < T; ++s) {
        const double eb = e * p.beta[static_cast<std::size_t>(cl)](static_cast<std::size_t>(t),
                                                                  static_cast<std::size_t>(s));
        total += std::lgamma(n[static_cast<std::size_t>(l)][static_cast<std::size_t>(t)][static_cast<std::size_t>(s)] + eb) -
                 std::lgamma(eb);
      }
    }
  }
  return total;
}

inline double assignment_prior(std::size_t num_tokens, int num_annotators, int num_clusters,
                               int num_labels, const std::vector<int>& z,
                               const std::vector<int>& c, double eps_nu, double eps_gamma) {
  std::vector<int> nc(static_cast<std::size_t>(num_clusters), 0);
  std::vector<int> nt(static_cast<std::size_t>(num_labels), 0);
  for (int cl : c) ++nc.at(static_cast<std::size_t>(cl));
  for (int t : z) ++nt.at(static_cast<std::size_t>(t));

  const double ac = eps_nu / num_clusters;
  const double at = eps_gamma / num_labels;
  double s = std::lgamma(eps_nu) - std::lgamma(num_annotators + eps_nu);
  for (int v : nc) s += std::lgamma(v + ac) - std::lgamma(ac);
  s += std::lgamma(eps_gamma) - std::lgamma(static_cast<double>(num_tokens) + eps_gamma);
  for (int v : nt) s += std::lgamma(v + at) - std::lgamma(at);
  return s;
}

inline double joint_log_weight(const crowdlab::CrowdAnnotations& crowd,
                               const std::vector<int>& z, const std::vector<int>& c,
                               const ModelParams& p) {
  const int C = static_cast<int>(p.eta.size());
  const int T = static_cast<int>(p.eta.at(0).size());
  return annotation_ll(crowd, z, c, p) +
         assignment_prior(crowd.num_tokens(), crowd.num_annotators(), C, T, z, c, p.eps_nu,
                          p.eps_gamma);
}

// p(z_i = . | everything else), by evaluating the joint at each truth value.
inline std::vector<double> truth_conditional(const crowdlab::CrowdAnnotations& crowd,
                                             std::vector<int> z, const std::vector<int>& c,
                                             const ModelParams& p, std::size_t token) {
  const int T = static_cast<int>(p.eta.at(0).size());
  std::vector<double> logw(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    z[token] = t;
    logw[static_cast<std::size_t>(t)] = joint_log_weight(crowd, z, c, p);
  }
  return softmax(logw);
}

// p(c_l = . | everything else), likewise.
inline std::vector<double> cluster_conditional(const crowdlab::CrowdAnnotations& crowd,
                                               const std::vector<int>& z, std::vector<int> c,
                                               const ModelParams& p, int annotator) {
  const int C = static_cast<int>(p.eta.size());
  std::vector<double> logw(static_cast<std::size_t>(C));
  for (int cl = 0; cl < C; ++cl) {
    c[static_cast<std::size_t>(annotator)] = cl;
    logw[static_cast<std::size_t>(cl)] = joint_log_weight(crowd, z, c, p);
  }
  return softmax(logw);
}

// ---------------------------------------------------------------------------
// Linear-chain model: objectives by full enumeration of the label space.

inline double path_score(const crowdlab::CrfModel& m, const crowdlab::EncodedSequence& seq,
                         const std::vector<int>& y) {
  double s = 0.0;
  for (std::size_t k = 0; k < seq.tokens.size(); ++k) {
    for (int row : seq.tokens[k].rows) s += m.unary(row, y[k]);
    if (k > 0 && m.config.transitions) s += m.transition(y[k - 1], y[k]);
  }
  return s;
}

// Visits every labeling of length K over T labels in lexicographic order.
template <class F>
inline void for_each_path(std::size_t K, int T, F&& visit) {
  std::vector<int> y(K, 0);
  for (;;) {
    visit(static_cast<const std::vector<int>&>(y));
    std::size_t k = K;
    while (k > 0) {
      --k;
      if (++y[k] < T) break;
      y[k] = 0;
      if (k == 0) return;
    }
    if (K == 0) return;
  }
}

struct EnumObjective {
  double loss = 0.0;
  std::vector<double> grad;
};

// Loss and gradient of one sequence by summing over all T^K labelings.
// cost == nullptr gives the conditional log likelihood; otherwise the
// denominator weights each labeling by its mean per-position disagreement,
// matching the cost-sensitive objective.
inline EnumObjective enumerate_objective(const crowdlab::CrfModel& m,
                                         const crowdlab::EncodedSequence& seq,
                                         const crowdlab::Matrix* cost) {
  const std::size_t K = seq.tokens.size();
  const int T = m.num_labels();
  std::vector<int> truth(K);
  for (std::size_t k = 0; k < K; ++k) truth[k] = seq.tokens[k].truth;

  std::vector<double> vals;
  for_each_path(K, T, [&](const std::vector<int>& y) {
    double v = path_score(m, seq, y);
    if (cost != nullptr) {
      const double w = crowdlab::sequence_cost(y, truth, *cost);
      if (w <= 0.0) return;
      v += std::log(w);
    }
    vals.push_back(v);
  });
  const double denom = logsumexp(vals);

  EnumObjective out;
  out.loss = path_score(m, seq, truth) - denom;
  out.grad.assign(m.num_weights(), 0.0);

  auto add_features = [&](const std::vector<int>& y, double w) {
    for (std::size_t k = 0; k < K; ++k) {
      for (int row : seq.tokens[k].rows)
        out.grad[static_cast<std::size_t>(row) * static_cast<std::size_t>(T) +
                 static_cast<std::size_t>(y[k])] += w;
      if (k > 0 && m.config.transitions)
        out.grad[m.transition_offset() +
                 static_cast<std::size_t>(y[k - 1]) * static_cast<std::size_t>(T) +
                 static_cast<std::size_t>(y[k])] += w;
    }
  };

  add_features(truth, 1.0);
  for_each_path(K, T, [&](const std::vector<int>& y) {
    double v = path_score(m, seq, y);
    if (cost != nullptr) {
      const double w = crowdlab::sequence_cost(y, truth, *cost);
      if (w <= 0.0) return;
      v += std::log(w);
    }
    add_features(y, -std::exp(v - denom));
  });
  return out;
}

// Exhaustive best labeling; first labeling in lexicographic order wins ties,
// which is what per-step smaller-id tie-breaking produces when scores tie
// globally.
inline std::vector<int> brute_viterbi(const crowdlab::CrfModel& m,
                                      const crowdlab::EncodedSequence& seq) {
  std::vector<int> best;
  double best_score = -std::numeric_limits<double>::infinity();
  for_each_path(seq.tokens.size(), m.num_labels(), [&](const std::vector<int>& y) {
    const double s = path_score(m, seq, y);
    if (s > best_score) {
      best_score = s;
      best = y;
    }
  });
  return best;
}

}  // namespace oracle
