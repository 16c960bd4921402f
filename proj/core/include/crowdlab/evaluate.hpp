#pragma once

#include <vector>

#include "crowdlab/corpus.hpp"
#include "crowdlab/label_set.hpp"
#include "crowdlab/matrix.hpp"

namespace crowdlab {

double token_accuracy(const std::vector<int>& predicted, const std::vector<int>& gold);

struct SpanScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int predicted_spans = 0;
  int gold_spans = 0;
  int matched = 0;
};

// Exact-match span F1 over flat labelings. When the label inventory uses
// B-/I- prefixes the usual chunking rules apply (an I- without a matching
// open chunk starts one; O and unprefixed labels close it); otherwise every
// maximal run of one label counts as a span.
SpanScore span_f1(const std::vector<int>& predicted, const std::vector<int>& gold,
                  const std::vector<int>& sequence_lengths, const LabelSet& labels);

struct AmbiguityScore {
  double flagged_recall = 0.0;    // doubly-annotated gold tokens that were flagged
  double candidate_recall = 0.0;  // doubly-annotated tokens whose candidates hold both golds
  int gold_ambiguous = 0;
};

// Scores flags and candidate sets against the corpus tokens that carry two
// gold labels. Throws when the corpus has none.
AmbiguityScore score_ambiguity(const Corpus& corpus, const std::vector<int>& flagged,
                               const std::vector<std::vector<int>>& candidates);

struct LabelPair {
  int first = 0;
  int second = 0;
  double value = 0.0;
};

struct CfComparison {
  double mean_abs_diff = 0.0;           // over unordered off-diagonal pairs
  std::vector<LabelPair> top_left;      // largest entries of the first matrix
  std::vector<LabelPair> top_right;     // largest entries of the second
};

CfComparison compare_confusability(const Matrix& left, const Matrix& right, int top_k);

}  // namespace crowdlab
