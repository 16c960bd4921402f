#ifndef CROWDLAB_CRF_HPP_
#define CROWDLAB_CRF_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "crowdlab/corpus.hpp"
#include "crowdlab/label_set.hpp"
#include "crowdlab/matrix.hpp"

namespace crowdlab {

struct CrfConfig {
  bool cost_sensitive = true;
  double l2 = 1.0;
  int max_epochs = 200;
  double grad_tolerance = 1e-4;
  // First-order (label bigram) features; an order-0 token classifier when off.
  bool transitions = true;
  int window = 2;     // word-identity context offsets -window..window
  int affix_len = 3;  // prefixes/suffixes up to this byte length
};

// String feature key -> dense row id. Built once on the training pass and
// frozen; unseen keys at prediction time simply score nothing.
class FeatureMap {
 public:
  int intern(const std::string& key);
  std::optional<int> find(const std::string& key) const;
  int size() const { return static_cast<int>(keys_.size()); }
  const std::vector<std::string>& keys() const { return keys_; }

  static FeatureMap from_keys(std::vector<std::string> keys);

 private:
  std::vector<std::string> keys_;
  std::unordered_map<std::string, int> index_;
};

// Surface feature keys of one token: word identities in the window,
// lowercased form, short prefixes/suffixes, digit and capitalization flags.
std::vector<std::string> token_feature_keys(const Sequence& seq, std::size_t pos,
                                            const CrfConfig& config);

struct EncodedToken {
  std::vector<int> rows;  // unary feature rows firing at this position
  int truth = -1;
};

struct EncodedSequence {
  std::vector<EncodedToken> tokens;
};

// Linear-chain model. Weights are a single flat vector: unary block of
// rows x labels (row-major), then, when transitions are enabled, a labels x
// labels transition block (previous label major).
struct CrfModel {
  CrfConfig config;
  LabelSet labels;
  FeatureMap features;
  std::vector<double> weights;

  int num_labels() const { return labels.size(); }
  std::size_t num_weights() const;
  std::size_t transition_offset() const;
  double unary(int row, int label) const;
  double transition(int prev, int cur) const;

  static CrfModel make(LabelSet labels, FeatureMap features, const CrfConfig& config);
};

// Per-position disagreement weights w(y, t): 0 on the diagonal, otherwise
// 1 - cf(y, t) clamped to [1e-3, 1]. With an all-zero cf the sequence cost
// below reduces to normalized Hamming distance.
Matrix make_cost_table(const Matrix& cf);
Matrix uniform_cost_table(int num_labels);

// Mean per-position disagreement weight between a candidate labeling and the
// reference.
double sequence_cost(const std::vector<int>& candidate, const std::vector<int>& reference,
                     const Matrix& cost_table);

// Encodes sequences against the model's feature map. `labels` supplies the
// truth per flat token (may be empty for prediction); `build` interns unseen
// keys (training) instead of dropping them.
std::vector<EncodedSequence> encode_sequences(const Corpus& corpus,
                                              const std::vector<int>& labels, CrfModel& model,
                                              bool build);

// Loss and gradient of one training sequence, as maximized: the truth score
// minus log of the cost-weighted partition sum (or the plain partition sum
// when `cost_table` is null, the conditional likelihood).
struct SequenceObjective {
  double loss = 0.0;
  std::vector<double> grad;
};

// Single forward-backward pass carrying first-order cost moments.
SequenceObjective sequence_objective(const CrfModel& model, const EncodedSequence& seq,
                                     const Matrix* cost_table);

// Reference implementation: one constrained forward-backward per position.
// O(length) slower; kept as an oracle for the moment-carrying pass.
SequenceObjective sequence_objective_naive(const CrfModel& model, const EncodedSequence& seq,
                                           const Matrix* cost_table);

// Posterior marginals P(z_k = y), rows = positions.
Matrix sequence_marginals(const CrfModel& model, const EncodedSequence& seq);

// Highest-scoring labeling; ties break to the smaller label id.
std::vector<int> viterbi(const CrfModel& model, const EncodedSequence& seq);

struct TrainReport {
  int iterations = 0;
  int evaluations = 0;
  double objective = 0.0;  // final penalized negative loss (minimized)
  double grad_inf_norm = 0.0;
  bool converged = false;
};

// Full-batch training: maximizes the summed sequence objective minus
// (l2/2)||w||^2 with L-BFGS until the gradient infinity norm drops under
// config.grad_tolerance or config.max_epochs iterations. Deterministic.
// `cost_table` must be null exactly when config.cost_sensitive is false.
TrainReport train_crf(CrfModel& model, const std::vector<EncodedSequence>& sequences,
                      const Matrix* cost_table);

std::vector<int> predict_labels(CrfModel& model, const Corpus& corpus);

void save_model(const CrfModel& model, const std::string& path);
CrfModel load_model(const std::string& path);

}  // namespace crowdlab

#endif  // CROWDLAB_CRF_HPP_
