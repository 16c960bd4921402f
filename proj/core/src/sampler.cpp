#include "crowdlab/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>

#include "crowdlab/error.hpp"
#include "numeric.hpp"
#include "stream_ids.hpp"

namespace crowdlab {

using numeric::log_gamma;

Hyperparams Hyperparams::defaults(int num_labels, int num_clusters) {
  Hyperparams h;
  h.num_clusters = num_clusters;
  h.lambda.assign(static_cast<std::size_t>(num_labels), 2.0);
  h.alpha = Matrix(static_cast<std::size_t>(num_labels), static_cast<std::size_t>(num_labels), 0.3);
  for (int t = 0; t < num_labels; ++t)
    h.alpha(static_cast<std::size_t>(t), static_cast<std::size_t>(t)) = 0.7;
  return h;
}

void Hyperparams::validate(int num_labels) const {
  if (num_labels < 2) throw Error("model needs at least 2 labels");
  if (num_clusters < 1) throw Error("cluster count must be >= 1");
  if (static_cast<int>(lambda.size()) != num_labels)
    throw Error("lambda size does not match label count");
  for (double v : lambda)
    if (!(v > 0.0)) throw Error("lambda entries must be positive");
  if (alpha.rows() != static_cast<std::size_t>(num_labels) ||
      alpha.cols() != static_cast<std::size_t>(num_labels))
    throw Error("alpha must be T x T");
  for (double v : alpha.data())
    if (!(v > 0.0)) throw Error("alpha entries must be positive");
  if (!(eps_nu > 0.0) || !(eps_gamma > 0.0))
    throw Error("eps_nu and eps_gamma must be positive");
}

namespace {

int sample_categorical_from_log(const std::vector<double>& logw, RngStream& rng,
                                const char* what) {
  double m = -std::numeric_limits<double>::infinity();
  for (double w : logw) {
    if (std::isnan(w) || w == std::numeric_limits<double>::infinity()) {
      std::ostringstream msg;
      msg << "non-finite log-probability in " << what << ": [";
      for (double v : logw) msg << v << " ";
      msg << "]";
      throw Error(msg.str());
    }
    m = std::max(m, w);
  }
  if (!std::isfinite(m)) throw Error(std::string("all-zero conditional in ") + what);
  double total = 0.0;
  std::vector<double> p(logw.size());
  for (std::size_t k = 0; k < logw.size(); ++k) {
    p[k] = std::exp(logw[k] - m);
    total += p[k];
  }
  const double u = rng.next_double() * total;
  double cum = 0.0;
  for (std::size_t k = 0; k < logw.size(); ++k) {
    cum += p[k];
    if (u < cum) return static_cast<int>(k);
  }
  return static_cast<int>(logw.size()) - 1;
}

}  // namespace

std::vector<int> majority_vote(const CrowdAnnotations& crowd, int num_labels) {
  std::vector<int> out(crowd.num_tokens(), -1);
  std::vector<int> votes(static_cast<std::size_t>(num_labels));
  for (std::size_t i = 0; i < crowd.num_tokens(); ++i) {
    const auto& anns = crowd.by_token()[i];
    if (anns.empty())
      throw Error("token " + std::to_string(i) + " has no annotations");
    std::fill(votes.begin(), votes.end(), 0);
    for (const auto& [l, s] : anns) {
      if (s < 0 || s >= num_labels)
        throw Error("annotation label out of range: " + std::to_string(s));
      ++votes[static_cast<std::size_t>(s)];
    }
    int best = 0;
    for (int t = 1; t < num_labels; ++t)
      if (votes[static_cast<std::size_t>(t)] > votes[static_cast<std::size_t>(best)]) best = t;
    out[i] = best;
  }
  return out;
}

SamplerState::SamplerState(const CrowdAnnotations& crowd, const Hyperparams& hyper,
                           std::uint64_t seed,
                           const std::vector<std::uint64_t>* annotator_streams)
    : crowd_(&crowd),
      hyper_(hyper),
      T_(static_cast<int>(hyper.lambda.size())),
      C_(hyper.num_clusters),
      L_(crowd.num_annotators()),
      N_(crowd.num_tokens()) {
  hyper_.validate(T_);
  if (!crowd.uncovered_tokens().empty())
    throw Error("sampler requires every token to carry at least one annotation");

  stream_of_.resize(static_cast<std::size_t>(L_));
  if (annotator_streams != nullptr) {
    if (annotator_streams->size() != static_cast<std::size_t>(L_))
      throw Error("annotator stream list size does not match annotator count");
    stream_of_ = *annotator_streams;
  } else {
    std::iota(stream_of_.begin(), stream_of_.end(), std::uint64_t{0});
  }
  cluster_order_.resize(static_cast<std::size_t>(L_));
  std::iota(cluster_order_.begin(), cluster_order_.end(), 0);
  std::sort(cluster_order_.begin(), cluster_order_.end(), [this](int a, int b) {
    const auto sa = stream_of_[static_cast<std::size_t>(a)];
    const auto sb = stream_of_[static_cast<std::size_t>(b)];
    if (sa != sb) return sa < sb;
    return a < b;
  });

  z_ = majority_vote(crowd, T_);

  c_.resize(static_cast<std::size_t>(L_));
  for (int l = 0; l < L_; ++l) {
    RngStream rng(seed, streams::kChainInitCluster, stream_of_[static_cast<std::size_t>(l)]);
    c_[static_cast<std::size_t>(l)] = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(C_)));
  }

  eta_.assign(static_cast<std::size_t>(C_) * static_cast<std::size_t>(T_), 0.0);
  beta_.assign(static_cast<std::size_t>(C_),
               Matrix(static_cast<std::size_t>(T_), static_cast<std::size_t>(T_)));
  for (int c = 0; c < C_; ++c) {
    for (int t = 0; t < T_; ++t) {
      eta_[idx_ct(c, t)] = 1.0 / hyper_.lambda[static_cast<std::size_t>(t)];
      double row_sum = 0.0;
      for (int s = 0; s < T_; ++s)
        row_sum += hyper_.alpha(static_cast<std::size_t>(t), static_cast<std::size_t>(s));
      for (int s = 0; s < T_; ++s)
        beta_[static_cast<std::size_t>(c)](static_cast<std::size_t>(t), static_cast<std::size_t>(s)) =
            hyper_.alpha(static_cast<std::size_t>(t), static_cast<std::size_t>(s)) / row_sum;
    }
  }

  n_c_.assign(static_cast<std::size_t>(C_), 0);
  n_t_.assign(static_cast<std::size_t>(T_), 0);
  n_lt_.assign(static_cast<std::size_t>(L_) * static_cast<std::size_t>(T_), 0);
  n_lts_.assign(static_cast<std::size_t>(L_) * static_cast<std::size_t>(T_) *
                    static_cast<std::size_t>(T_),
                0);
  recompute_counts();
}

void SamplerState::recompute_counts() {
  std::fill(n_c_.begin(), n_c_.end(), 0);
  std::fill(n_t_.begin(), n_t_.end(), 0);
  std::fill(n_lt_.begin(), n_lt_.end(), 0);
  std::fill(n_lts_.begin(), n_lts_.end(), 0);
  for (int l = 0; l < L_; ++l) ++n_c_[static_cast<std::size_t>(c_[static_cast<std::size_t>(l)])];
  for (std::size_t i = 0; i < N_; ++i) {
    const int t = z_[i];
    ++n_t_[static_cast<std::size_t>(t)];
    for (const auto& [l, s] : crowd_->by_token()[i]) {
      ++n_lt_[idx_lt(l, t)];
      ++n_lts_[idx_lts(l, t, s)];
    }
  }
}

void SamplerState::add_token(std::size_t token, int t, int delta) {
  n_t_[static_cast<std::size_t>(t)] += delta;
  for (const auto& [l, s] : crowd_->by_token()[token]) {
    n_lt_[idx_lt(l, t)] += delta;
    n_lts_[idx_lts(l, t, s)] += delta;
  }
}

std::vector<double> SamplerState::truth_log_weights(std::size_t token) const {
  const int zi = z_[token];
  std::vector<double> logw(static_cast<std::size_t>(T_));
  for (int t = 0; t < T_; ++t) {
    const double excl = (t == zi) ? 1.0 : 0.0;
    logw[static_cast<std::size_t>(t)] =
        std::log(static_cast<double>(n_t_[static_cast<std::size_t>(t)]) - excl +
                 hyper_.eps_gamma / static_cast<double>(T_));
  }
  for (const auto& [l, s] : crowd_->by_token()[token]) {
    const int cl = c_[static_cast<std::size_t>(l)];
    const Matrix& b = beta_[static_cast<std::size_t>(cl)];
    for (int t = 0; t < T_; ++t) {
      const double excl = (t == zi) ? 1.0 : 0.0;
      const double e = eta_[idx_ct(cl, t)];
      const double num = static_cast<double>(n_lts_[idx_lts(l, t, s)]) - excl +
                         e * b(static_cast<std::size_t>(t), static_cast<std::size_t>(s));
      const double den = static_cast<double>(n_lt_[idx_lt(l, t)]) - excl + e;
      logw[static_cast<std::size_t>(t)] += std::log(num) - std::log(den);
    }
  }
  return logw;
}

std::vector<double> SamplerState::cluster_log_weights(int annotator) const {
  const int cl = c_[static_cast<std::size_t>(annotator)];
  std::vector<double> logw(static_cast<std::size_t>(C_));
  for (int c = 0; c < C_; ++c) {
    const double excl = (c == cl) ? 1.0 : 0.0;
    double w = std::log(static_cast<double>(n_c_[static_cast<std::size_t>(c)]) - excl +
                        hyper_.eps_nu / static_cast<double>(C_));
    const Matrix& b = beta_[static_cast<std::size_t>(c)];
    for (int t = 0; t < T_; ++t) {
      const int nlt = n_lt_[idx_lt(annotator, t)];
      if (nlt == 0) continue;
      const double e = eta_[idx_ct(c, t)];
      w += log_gamma(e) - log_gamma(static_cast<double>(nlt) + e);
      for (int s = 0; s < T_; ++s) {
        const int nlts = n_lts_[idx_lts(annotator, t, s)];
        if (nlts == 0) continue;
        const double eb = e * b(static_cast<std::size_t>(t), static_cast<std::size_t>(s));
        w += log_gamma(static_cast<double>(nlts) + eb) - log_gamma(eb);
      }
    }
    logw[static_cast<std::size_t>(c)] = w;
  }
  return logw;
}

void SamplerState::resample_truth(std::size_t token, RngStream& rng) {
  const auto logw = truth_log_weights(token);
  const int t_new = sample_categorical_from_log(logw, rng, "truth conditional");
  const int t_old = z_[token];
  if (t_new == t_old) return;
  add_token(token, t_old, -1);
  z_[token] = t_new;
  add_token(token, t_new, +1);
}

void SamplerState::resample_cluster(int annotator, RngStream& rng) {
  const auto logw = cluster_log_weights(annotator);
  const int c_new = sample_categorical_from_log(logw, rng, "cluster conditional");
  const int c_old = c_[static_cast<std::size_t>(annotator)];
  if (c_new == c_old) return;
  --n_c_[static_cast<std::size_t>(c_old)];
  c_[static_cast<std::size_t>(annotator)] = c_new;
  ++n_c_[static_cast<std::size_t>(c_new)];
}

double SamplerState::beta_log_target(int c, int t, int j, double x, double cap,
                                     const std::vector<int>& nj,
                                     const std::vector<int>& ntt) const {
  const double e = eta_[idx_ct(c, t)];
  const double btt = cap - x;
  double s = 0.0;
  for (std::size_t m = 0; m < nj.size(); ++m) {
    if (nj[m] > 0)
      s += log_gamma(static_cast<double>(nj[m]) + e * x) - log_gamma(e * x);
    if (ntt[m] > 0)
      s += log_gamma(static_cast<double>(ntt[m]) + e * btt) - log_gamma(e * btt);
  }
  const double lam = hyper_.lambda[static_cast<std::size_t>(t)];
  const double aj = lam * hyper_.alpha(static_cast<std::size_t>(t), static_cast<std::size_t>(j));
  const double at = lam * hyper_.alpha(static_cast<std::size_t>(t), static_cast<std::size_t>(t));
  const double v = x / cap;
  s += (aj - 1.0) * std::log(v) + (at - 1.0) * std::log1p(-v);
  return s;
}

void SamplerState::refresh_beta(int c, int t, int j, int steps, MhMode mode, RngStream& rng) {
  if (j == t) throw Error("beta refresh targets an off-diagonal entry");
  Matrix& b = beta_[static_cast<std::size_t>(c)];
  const double cap = b(static_cast<std::size_t>(t), static_cast<std::size_t>(j)) +
                     b(static_cast<std::size_t>(t), static_cast<std::size_t>(t));

  std::vector<int> nj, ntt;
  for (int l = 0; l < L_; ++l) {
    if (c_[static_cast<std::size_t>(l)] != c) continue;
    const int a = n_lts_[idx_lts(l, t, j)];
    const int d = n_lts_[idx_lts(l, t, t)];
    if (a > 0 || d > 0) {
      nj.push_back(a);
      ntt.push_back(d);
    }
  }

  double x = b(static_cast<std::size_t>(t), static_cast<std::size_t>(j));
  double lt_x = beta_log_target(c, t, j, x, cap, nj, ntt);
  for (int step = 0; step < steps; ++step) {
    ++beta_stats_.proposed;
    const double w = std::min(2.0 * x, 1.0);
    const double xp = rng.uniform(0.0, w);
    const double u2 = rng.next_double();
    if (!(xp > 0.0) || !(cap - xp > 0.0)) continue;
    double log_ratio = 0.0;
    if (mode == MhMode::kCorrected) {
      const double wp = std::min(2.0 * xp, 1.0);
      if (x >= wp) continue;  // reverse move impossible
      log_ratio += std::log(w) - std::log(wp);
    }
    const double lt_xp = beta_log_target(c, t, j, xp, cap, nj, ntt);
    log_ratio += lt_xp - lt_x;
    if (log_ratio >= 0.0 || (u2 > 0.0 && std::log(u2) < log_ratio)) {
      x = xp;
      lt_x = lt_xp;
      b(static_cast<std::size_t>(t), static_cast<std::size_t>(j)) = x;
      b(static_cast<std::size_t>(t), static_cast<std::size_t>(t)) = cap - x;
      ++beta_stats_.accepted;
    }
  }
}

double SamplerState::eta_log_target(int c, int t, double x,
                                    const std::vector<int>& members) const {
  const Matrix& b = beta_[static_cast<std::size_t>(c)];
  double s = 0.0;
  for (int l : members) {
    const int nlt = n_lt_[idx_lt(l, t)];
    s += log_gamma(x) - log_gamma(static_cast<double>(nlt) + x);
    for (int jj = 0; jj < T_; ++jj) {
      const int nlts = n_lts_[idx_lts(l, t, jj)];
      if (nlts == 0) continue;
      const double eb = x * b(static_cast<std::size_t>(t), static_cast<std::size_t>(jj));
      s += log_gamma(static_cast<double>(nlts) + eb) - log_gamma(eb);
    }
  }
  const double lam = hyper_.lambda[static_cast<std::size_t>(t)];
  s += std::log(lam) - lam * x;
  return s;
}

void SamplerState::refresh_eta(int c, int t, int steps, MhMode mode, RngStream& rng) {
  std::vector<int> members;
  for (int l = 0; l < L_; ++l)
    if (c_[static_cast<std::size_t>(l)] == c && n_lt_[idx_lt(l, t)] > 0) members.push_back(l);

  double x = eta_[idx_ct(c, t)];
  double lt_x = eta_log_target(c, t, x, members);
  for (int step = 0; step < steps; ++step) {
    ++eta_stats_.proposed;
    const double w = (mode == MhMode::kCorrected) ? 2.0 * x : std::min(2.0 * x, 1.0);
    const double xp = rng.uniform(0.0, w);
    const double u2 = rng.next_double();
    if (!(xp > 0.0)) continue;
    double log_ratio = 0.0;
    if (mode == MhMode::kCorrected) {
      if (x >= 2.0 * xp) continue;  // reverse move impossible
      log_ratio += std::log(x) - std::log(xp);
    }
    const double lt_xp = eta_log_target(c, t, xp, members);
    log_ratio += lt_xp - lt_x;
    if (log_ratio >= 0.0 || (u2 > 0.0 && std::log(u2) < log_ratio)) {
      x = xp;
      lt_x = lt_xp;
      eta_[idx_ct(c, t)] = x;
      ++eta_stats_.accepted;
    }
  }
}

void SamplerState::sweep(std::uint64_t seed, std::uint64_t sweep_index, int mh_steps,
                         MhMode mode) {
  for (std::size_t i = 0; i < N_; ++i) {
    RngStream rng(seed, streams::kChainTruth, sweep_index, i);
    resample_truth(i, rng);
  }
  for (int l : cluster_order_) {
    RngStream rng(seed, streams::kChainCluster, sweep_index,
                  stream_of_[static_cast<std::size_t>(l)]);
    resample_cluster(l, rng);
  }
  if (mh_steps <= 0) return;
  for (int c = 0; c < C_; ++c) {
    Matrix& b = beta_[static_cast<std::size_t>(c)];
    for (int t = 0; t < T_; ++t) {
      for (int j = 0; j < T_; ++j) {
        if (j == t) continue;
        const std::uint64_t flat =
            (static_cast<std::uint64_t>(c) * static_cast<std::uint64_t>(T_) +
             static_cast<std::uint64_t>(t)) * static_cast<std::uint64_t>(T_) +
            static_cast<std::uint64_t>(j);
        RngStream rng(seed, streams::kChainBeta, sweep_index, flat);
        refresh_beta(c, t, j, mh_steps, mode, rng);
      }
      double row_sum = 0.0;
      for (int s = 0; s < T_; ++s)
        row_sum += b(static_cast<std::size_t>(t), static_cast<std::size_t>(s));
      if (std::abs(row_sum - 1.0) > 1e-12) {
        std::cerr << "warning: confusion prototype row drifted off the simplex (cluster " << c
                  << ", truth " << t << ", sum " << row_sum << "); renormalizing\n";
        for (int s = 0; s < T_; ++s)
          b(static_cast<std::size_t>(t), static_cast<std::size_t>(s)) /= row_sum;
      }
    }
  }
  for (int c = 0; c < C_; ++c) {
    for (int t = 0; t < T_; ++t) {
      const std::uint64_t flat = static_cast<std::uint64_t>(c) * static_cast<std::uint64_t>(T_) +
                                 static_cast<std::uint64_t>(t);
      RngStream rng(seed, streams::kChainEta, sweep_index, flat);
      refresh_eta(c, t, mh_steps, mode, rng);
    }
  }
}

double SamplerState::annotation_log_likelihood() const {
  double s = 0.0;
  for (int l = 0; l < L_; ++l) {
    const int cl = c_[static_cast<std::size_t>(l)];
    const Matrix& b = beta_[static_cast<std::size_t>(cl)];
    for (int t = 0; t < T_; ++t) {
      const int nlt = n_lt_[idx_lt(l, t)];
      if (nlt == 0) continue;
      const double e = eta_[idx_ct(cl, t)];
      s += log_gamma(e) - log_gamma(static_cast<double>(nlt) + e);
      for (int j = 0; j < T_; ++j) {
        const int nlts = n_lts_[idx_lts(l, t, j)];
        if (nlts == 0) continue;
        const double eb = e * b(static_cast<std::size_t>(t), static_cast<std::size_t>(j));
        s += log_gamma(static_cast<double>(nlts) + eb) - log_gamma(eb);
      }
    }
  }
  return s;
}

double SamplerState::assignment_log_prior() const {
  const double ec = hyper_.eps_nu / static_cast<double>(C_);
  const double eg = hyper_.eps_gamma / static_cast<double>(T_);
  double s = log_gamma(hyper_.eps_nu) - log_gamma(static_cast<double>(L_) + hyper_.eps_nu);
  for (int c = 0; c < C_; ++c)
    s += log_gamma(static_cast<double>(n_c_[static_cast<std::size_t>(c)]) + ec) - log_gamma(ec);
  s += log_gamma(hyper_.eps_gamma) -
       log_gamma(static_cast<double>(N_) + hyper_.eps_gamma);
  for (int t = 0; t < T_; ++t)
    s += log_gamma(static_cast<double>(n_t_[static_cast<std::size_t>(t)]) + eg) - log_gamma(eg);
  return s;
}

}  // namespace crowdlab
