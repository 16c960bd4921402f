#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "crowdlab/crf.hpp"
#include "crowdlab/error.hpp"

namespace crowdlab {

std::size_t CrfModel::num_weights() const {
  const auto T = static_cast<std::size_t>(labels.size());
  const auto R = static_cast<std::size_t>(features.size());
  return R * T + (config.transitions ? T * T : 0);
}

std::size_t CrfModel::transition_offset() const {
  return static_cast<std::size_t>(features.size()) * static_cast<std::size_t>(labels.size());
}

double CrfModel::unary(int row, int label) const {
  return weights[static_cast<std::size_t>(row) * static_cast<std::size_t>(labels.size()) +
                 static_cast<std::size_t>(label)];
}

double CrfModel::transition(int prev, int cur) const {
  if (!config.transitions) return 0.0;
  return weights[transition_offset() +
                 static_cast<std::size_t>(prev) * static_cast<std::size_t>(labels.size()) +
                 static_cast<std::size_t>(cur)];
}

CrfModel CrfModel::make(LabelSet labels, FeatureMap features, const CrfConfig& config) {
  CrfModel m;
  m.config = config;
  m.labels = std::move(labels);
  m.features = std::move(features);
  if (m.labels.size() < 1) throw Error("model needs a non-empty label set");
  m.weights.assign(m.num_weights(), 0.0);
  return m;
}

Matrix make_cost_table(const Matrix& cf) {
  if (cf.rows() != cf.cols()) throw Error("confusability matrix must be square");
  const std::size_t T = cf.rows();
  Matrix w(T, T);
  for (std::size_t y = 0; y < T; ++y) {
    for (std::size_t t = 0; t < T; ++t) {
      if (y == t) continue;
      w(y, t) = std::clamp(1.0 - cf(y, t), 1e-3, 1.0);
    }
  }
  return w;
}

Matrix uniform_cost_table(int num_labels) {
  Matrix w(static_cast<std::size_t>(num_labels), static_cast<std::size_t>(num_labels), 1.0);
  for (int t = 0; t < num_labels; ++t)
    w(static_cast<std::size_t>(t), static_cast<std::size_t>(t)) = 0.0;
  return w;
}

double sequence_cost(const std::vector<int>& candidate, const std::vector<int>& reference,
                     const Matrix& cost_table) {
  if (candidate.size() != reference.size() || candidate.empty())
    throw Error("sequence cost needs two aligned non-empty labelings");
  double s = 0.0;
  for (std::size_t k = 0; k < candidate.size(); ++k)
    s += cost_table(static_cast<std::size_t>(candidate[k]),
                    static_cast<std::size_t>(reference[k]));
  return s / static_cast<double>(candidate.size());
}

namespace {

// Shift-stabilized potentials of one sequence.
struct Potentials {
  std::size_t K = 0;
  int T = 0;
  std::vector<std::vector<double>> unary;  // U[k][y], raw scores
  std::vector<std::vector<double>> e;      // exp(U - umax_k)
  std::vector<double> umax;
  std::vector<std::vector<double>> tau;  // exp(Tr - tmax)
  double tmax = 0.0;
};

Potentials build_potentials(const CrfModel& model, const EncodedSequence& seq) {
  Potentials p;
  p.K = seq.tokens.size();
  p.T = model.num_labels();
  const auto T = static_cast<std::size_t>(p.T);
  p.unary.assign(p.K, std::vector<double>(T, 0.0));
  p.e.assign(p.K, std::vector<double>(T, 0.0));
  p.umax.assign(p.K, 0.0);
  for (std::size_t k = 0; k < p.K; ++k) {
    auto& u = p.unary[k];
    for (int row : seq.tokens[k].rows)
      for (std::size_t y = 0; y < T; ++y) u[y] += model.unary(row, static_cast<int>(y));
    p.umax[k] = *std::max_element(u.begin(), u.end());
    for (std::size_t y = 0; y < T; ++y) p.e[k][y] = std::exp(u[y] - p.umax[k]);
  }
  p.tau.assign(T, std::vector<double>(T, 1.0));
  if (model.config.transitions && p.K > 1) {
    p.tmax = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < T; ++a)
      for (std::size_t b = 0; b < T; ++b)
        p.tmax = std::max(p.tmax, model.transition(static_cast<int>(a), static_cast<int>(b)));
    for (std::size_t a = 0; a < T; ++a)
      for (std::size_t b = 0; b < T; ++b)
        p.tau[a][b] =
            std::exp(model.transition(static_cast<int>(a), static_cast<int>(b)) - p.tmax);
  } else {
    p.tmax = 0.0;
  }
  return p;
}

struct ScaledFb {
  std::vector<std::vector<double>> ahat, bhat;
  std::vector<double> scale;
  double log_z = 0.0;  // includes the shift terms
};

// `extra` optionally multiplies the unary potentials position-wise (used by
// the per-position oracle passes); null means all ones.
ScaledFb scaled_forward_backward(const Potentials& p,
                                 const std::vector<std::vector<double>>* extra) {
  const auto T = static_cast<std::size_t>(p.T);
  ScaledFb fb;
  fb.ahat.assign(p.K, std::vector<double>(T, 0.0));
  fb.bhat.assign(p.K, std::vector<double>(T, 1.0));
  fb.scale.assign(p.K, 0.0);

  auto pot = [&](std::size_t k, std::size_t y) {
    return extra == nullptr ? p.e[k][y] : p.e[k][y] * (*extra)[k][y];
  };

  double s0 = 0.0;
  for (std::size_t y = 0; y < T; ++y) {
    fb.ahat[0][y] = pot(0, y);
    s0 += fb.ahat[0][y];
  }
  if (!(s0 > 0.0)) throw Error("vanishing forward mass in sequence model");
  for (std::size_t y = 0; y < T; ++y) fb.ahat[0][y] /= s0;
  fb.scale[0] = s0;

  for (std::size_t k = 1; k < p.K; ++k) {
    double sk = 0.0;
    for (std::size_t b = 0; b < T; ++b) {
      double acc = 0.0;
      for (std::size_t a = 0; a < T; ++a) acc += fb.ahat[k - 1][a] * p.tau[a][b];
      fb.ahat[k][b] = acc * pot(k, b);
      sk += fb.ahat[k][b];
    }
    if (!(sk > 0.0)) throw Error("vanishing forward mass in sequence model");
    for (std::size_t b = 0; b < T; ++b) fb.ahat[k][b] /= sk;
    fb.scale[k] = sk;
  }

  for (std::size_t k = p.K - 1; k-- > 0;) {
    for (std::size_t y = 0; y < T; ++y) {
      double acc = 0.0;
      for (std::size_t b = 0; b < T; ++b)
        acc += p.tau[y][b] * pot(k + 1, b) * fb.bhat[k + 1][b];
      fb.bhat[k][y] = acc / fb.scale[k + 1];
    }
  }

  fb.log_z = 0.0;
  for (std::size_t k = 0; k < p.K; ++k) fb.log_z += std::log(fb.scale[k]) + p.umax[k];
  if (p.K > 1) fb.log_z += static_cast<double>(p.K - 1) * p.tmax;
  return fb;
}

double truth_score(const CrfModel& model, const EncodedSequence& seq, const Potentials& p) {
  double s = 0.0;
  for (std::size_t k = 0; k < p.K; ++k) {
    const int t = seq.tokens[k].truth;
    if (t < 0) throw Error("sequence objective needs truth labels");
    s += p.unary[k][static_cast<std::size_t>(t)];
    if (k > 0) s += model.transition(seq.tokens[k - 1].truth, t);
  }
  return s;
}

void add_truth_features(const CrfModel& model, const EncodedSequence& seq,
                        std::vector<double>* grad) {
  const auto T = static_cast<std::size_t>(model.num_labels());
  for (std::size_t k = 0; k < seq.tokens.size(); ++k) {
    const auto t = static_cast<std::size_t>(seq.tokens[k].truth);
    for (int row : seq.tokens[k].rows) (*grad)[static_cast<std::size_t>(row) * T + t] += 1.0;
    if (model.config.transitions && k > 0)
      (*grad)[model.transition_offset() +
              static_cast<std::size_t>(seq.tokens[k - 1].truth) * T + t] += 1.0;
  }
}

// Subtracts expectation terms given per-position unary coefficients r[k][y]
// and a callback for edge coefficients.
template <typename EdgeCoef>
void subtract_expectations(const CrfModel& model, const EncodedSequence& seq,
                           const std::vector<std::vector<double>>& r, EdgeCoef edge_coef,
                           std::vector<double>* grad) {
  const auto T = static_cast<std::size_t>(model.num_labels());
  for (std::size_t k = 0; k < seq.tokens.size(); ++k)
    for (int row : seq.tokens[k].rows)
      for (std::size_t y = 0; y < T; ++y)
        (*grad)[static_cast<std::size_t>(row) * T + y] -= r[k][y];
  if (model.config.transitions) {
    for (std::size_t k = 1; k < seq.tokens.size(); ++k)
      for (std::size_t a = 0; a < T; ++a)
        for (std::size_t b = 0; b < T; ++b)
          (*grad)[model.transition_offset() + a * T + b] -= edge_coef(k, a, b);
  }
}

}  // namespace

SequenceObjective sequence_objective(const CrfModel& model, const EncodedSequence& seq,
                                     const Matrix* cost_table) {
  if (model.config.cost_sensitive != (cost_table != nullptr))
    throw Error("cost table presence must match the configured mode");
  if (seq.tokens.empty()) throw Error("empty sequence");
  const Potentials p = build_potentials(model, seq);
  const auto T = static_cast<std::size_t>(p.T);
  const auto fb = scaled_forward_backward(p, nullptr);

  SequenceObjective out;
  out.grad.assign(model.num_weights(), 0.0);
  const double score = truth_score(model, seq, p);
  add_truth_features(model, seq, &out.grad);

  if (cost_table == nullptr) {
    out.loss = score - fb.log_z;
    std::vector<std::vector<double>> r(p.K, std::vector<double>(T, 0.0));
    for (std::size_t k = 0; k < p.K; ++k)
      for (std::size_t y = 0; y < T; ++y) r[k][y] = fb.ahat[k][y] * fb.bhat[k][y];
    subtract_expectations(
        model, seq, r,
        [&](std::size_t k, std::size_t a, std::size_t b) {
          return fb.ahat[k - 1][a] * p.tau[a][b] * p.e[k][b] * fb.bhat[k][b] / fb.scale[k];
        },
        &out.grad);
    return out;
  }

  if (cost_table->rows() != T || cost_table->cols() != T)
    throw Error("cost table does not match label count");

  // Per-position disagreement weights against the truth labeling.
  std::vector<std::vector<double>> wt(p.K, std::vector<double>(T, 0.0));
  for (std::size_t k = 0; k < p.K; ++k) {
    const auto t = static_cast<std::size_t>(seq.tokens[k].truth);
    for (std::size_t y = 0; y < T; ++y)
      wt[k][y] = (*cost_table)(y, t) / static_cast<double>(p.K);
  }

  // Forward cost moments m and backward cost moments n alongside the scaled
  // messages: m_k(y) accumulates the prefix cost mass of paths ending in
  // (k, y), n_k(y) the suffix cost mass of paths leaving (k, y).
  std::vector<std::vector<double>> m(p.K, std::vector<double>(T, 0.0));
  for (std::size_t y = 0; y < T; ++y) m[0][y] = fb.ahat[0][y] * wt[0][y];
  for (std::size_t k = 1; k < p.K; ++k) {
    for (std::size_t b = 0; b < T; ++b) {
      double carry = 0.0, fresh = 0.0;
      for (std::size_t a = 0; a < T; ++a) {
        carry += p.tau[a][b] * m[k - 1][a];
        fresh += p.tau[a][b] * fb.ahat[k - 1][a];
      }
      m[k][b] = p.e[k][b] * (carry + fresh * wt[k][b]) / fb.scale[k];
    }
  }
  std::vector<std::vector<double>> n(p.K, std::vector<double>(T, 0.0));
  for (std::size_t k = p.K - 1; k-- > 0;) {
    for (std::size_t y = 0; y < T; ++y) {
      double acc = 0.0;
      for (std::size_t b = 0; b < T; ++b)
        acc += p.tau[y][b] * p.e[k + 1][b] *
               (n[k + 1][b] + fb.bhat[k + 1][b] * wt[k + 1][b]);
      n[k][y] = acc / fb.scale[k + 1];
    }
  }

  double ebar = 0.0;
  for (std::size_t y = 0; y < T; ++y) ebar += m[p.K - 1][y];
  if (!(ebar > 0.0))
    throw Error("cost-weighted partition vanished; expected mean cost " + std::to_string(ebar));

  out.loss = score - fb.log_z - std::log(ebar);

  std::vector<std::vector<double>> r(p.K, std::vector<double>(T, 0.0));
  for (std::size_t k = 0; k < p.K; ++k)
    for (std::size_t y = 0; y < T; ++y)
      r[k][y] = (m[k][y] * fb.bhat[k][y] + fb.ahat[k][y] * n[k][y]) / ebar;
  subtract_expectations(
      model, seq, r,
      [&](std::size_t k, std::size_t a, std::size_t b) {
        const double base = p.tau[a][b] * p.e[k][b] / fb.scale[k];
        const double mass = m[k - 1][a] * fb.bhat[k][b] +
                            fb.ahat[k - 1][a] * wt[k][b] * fb.bhat[k][b] +
                            fb.ahat[k - 1][a] * n[k][b];
        return base * mass / ebar;
      },
      &out.grad);
  return out;
}

SequenceObjective sequence_objective_naive(const CrfModel& model, const EncodedSequence& seq,
                                           const Matrix* cost_table) {
  if (model.config.cost_sensitive != (cost_table != nullptr))
    throw Error("cost table presence must match the configured mode");
  if (seq.tokens.empty()) throw Error("empty sequence");
  const Potentials p = build_potentials(model, seq);
  const auto T = static_cast<std::size_t>(p.T);

  SequenceObjective out;
  out.grad.assign(model.num_weights(), 0.0);
  const double score = truth_score(model, seq, p);
  add_truth_features(model, seq, &out.grad);

  auto accumulate = [&](const ScaledFb& fb, double weight) {
    std::vector<std::vector<double>> r(p.K, std::vector<double>(T, 0.0));
    for (std::size_t k = 0; k < p.K; ++k)
      for (std::size_t y = 0; y < T; ++y) r[k][y] = weight * fb.ahat[k][y] * fb.bhat[k][y];
    // The extra factor at the constrained position is part of pot(), so the
    // plain marginal formulas apply unchanged.
    return r;
  };

  if (cost_table == nullptr) {
    const auto fb = scaled_forward_backward(p, nullptr);
    out.loss = score - fb.log_z;
    const auto r = accumulate(fb, 1.0);
    subtract_expectations(
        model, seq, r,
        [&](std::size_t k, std::size_t a, std::size_t b) {
          return fb.ahat[k - 1][a] * p.tau[a][b] * p.e[k][b] * fb.bhat[k][b] / fb.scale[k];
        },
        &out.grad);
    return out;
  }

  // One constrained pass per position: the pass at k0 weights every path by
  // its disagreement cost at k0. Summing the constrained partition functions
  // gives the cost-weighted denominator of the loss.
  std::vector<std::vector<double>> wt(p.K, std::vector<double>(T, 0.0));
  for (std::size_t k = 0; k < p.K; ++k) {
    const auto t = static_cast<std::size_t>(seq.tokens[k].truth);
    for (std::size_t y = 0; y < T; ++y)
      wt[k][y] = (*cost_table)(y, t) / static_cast<double>(p.K);
  }

  std::vector<ScaledFb> passes;
  passes.reserve(p.K);
  std::vector<double> log_zk(p.K);
  for (std::size_t k0 = 0; k0 < p.K; ++k0) {
    std::vector<std::vector<double>> extra(p.K, std::vector<double>(T, 1.0));
    extra[k0] = wt[k0];
    passes.push_back(scaled_forward_backward(p, &extra));
    log_zk[k0] = passes.back().log_z;
  }
  const double max_log = *std::max_element(log_zk.begin(), log_zk.end());
  double denom = 0.0;
  std::vector<double> pass_weight(p.K);
  for (std::size_t k0 = 0; k0 < p.K; ++k0) {
    pass_weight[k0] = std::exp(log_zk[k0] - max_log);
    denom += pass_weight[k0];
  }
  for (auto& w : pass_weight) w /= denom;
  out.loss = score - (max_log + std::log(denom));

  for (std::size_t k0 = 0; k0 < p.K; ++k0) {
    const auto& fb = passes[k0];
    std::vector<std::vector<double>> extra(p.K, std::vector<double>(T, 1.0));
    extra[k0] = wt[k0];
    const auto r = accumulate(fb, pass_weight[k0]);
    subtract_expectations(
        model, seq, r,
        [&](std::size_t k, std::size_t a, std::size_t b) {
          return pass_weight[k0] * fb.ahat[k - 1][a] * p.tau[a][b] * p.e[k][b] * extra[k][b] *
                 fb.bhat[k][b] / fb.scale[k];
        },
        &out.grad);
  }
  return out;
}

Matrix sequence_marginals(const CrfModel& model, const EncodedSequence& seq) {
  if (seq.tokens.empty()) throw Error("empty sequence");
  const Potentials p = build_potentials(model, seq);
  const auto fb = scaled_forward_backward(p, nullptr);
  Matrix out(p.K, static_cast<std::size_t>(p.T));
  for (std::size_t k = 0; k < p.K; ++k)
    for (std::size_t y = 0; y < static_cast<std::size_t>(p.T); ++y)
      out(k, y) = fb.ahat[k][y] * fb.bhat[k][y];
  return out;
}

std::vector<int> viterbi(const CrfModel& model, const EncodedSequence& seq) {
  const auto K = seq.tokens.size();
  if (K == 0) return {};
  const auto T = static_cast<std::size_t>(model.num_labels());

  std::vector<std::vector<double>> score(K, std::vector<double>(T, 0.0));
  for (std::size_t k = 0; k < K; ++k)
    for (int row : seq.tokens[k].rows)
      for (std::size_t y = 0; y < T; ++y) score[k][y] += model.unary(row, static_cast<int>(y));

  std::vector<std::vector<double>> best(K, std::vector<double>(T, 0.0));
  std::vector<std::vector<int>> back(K, std::vector<int>(T, 0));
  best[0] = score[0];
  for (std::size_t k = 1; k < K; ++k) {
    for (std::size_t y = 0; y < T; ++y) {
      double b = -std::numeric_limits<double>::infinity();
      int arg = 0;
      for (std::size_t a = 0; a < T; ++a) {
        const double v =
            best[k - 1][a] + model.transition(static_cast<int>(a), static_cast<int>(y));
        if (v > b) {
          b = v;
          arg = static_cast<int>(a);
        }
      }
      best[k][y] = b + score[k][y];
      back[k][y] = arg;
    }
  }
  std::size_t last = 0;
  for (std::size_t y = 1; y < T; ++y)
    if (best[K - 1][y] > best[K - 1][last]) last = y;
  std::vector<int> out(K);
  out[K - 1] = static_cast<int>(last);
  for (std::size_t k = K - 1; k > 0; --k)
    out[k - 1] = back[k][static_cast<std::size_t>(out[k])];
  return out;
}

std::vector<int> predict_labels(CrfModel& model, const Corpus& corpus) {
  const auto encoded = encode_sequences(corpus, {}, model, false);
  std::vector<int> out;
  out.reserve(corpus.token_count());
  for (const auto& seq : encoded) {
    const auto labels = viterbi(model, seq);
    out.insert(out.end(), labels.begin(), labels.end());
  }
  return out;
}

}  // namespace crowdlab
