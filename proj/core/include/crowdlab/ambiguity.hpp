#ifndef CROWDLAB_AMBIGUITY_HPP_
#define CROWDLAB_AMBIGUITY_HPP_

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "crowdlab/crowd.hpp"
#include "crowdlab/label_set.hpp"
#include "crowdlab/matrix.hpp"
#include "crowdlab/rank1.hpp"

namespace crowdlab {

// Agreement counts for one sequence: labels is rows x positions with -1 where
// an annotator skipped a token. Entry (l, j) counts the annotators (self
// included) whose label at j equals annotator l's; skipped cells are 0 and
// the annotator is left out of the other rows' counts at j.
Matrix agreement_matrix(const std::vector<std::vector<int>>& labels);

struct SequenceFactorization {
  std::vector<int> annotators;  // rows of the agreement matrix, ascending ids
  Rank1 factor;
  bool eligible = false;  // at least 2 reliable annotators labeled the sequence
};

struct AmbiguityConfig {
  double flag_fraction = 0.10;
  // Per-sequence max-normalization of the token scores before global
  // ranking; raw scores are ranked when off.
  bool normalize = true;
};

struct AmbiguityResult {
  std::vector<SequenceFactorization> sequences;
  std::vector<double> mu;       // per flat token; NaN for ineligible tokens
  std::vector<double> mu_norm;  // per-sequence max-normalized; NaN likewise
  std::size_t eligible_tokens = 0;

  std::vector<std::size_t> flagged;  // flat ids, ascending

  // Ordered candidate labels per flat token. Flagged tokens carry the top-2
  // labels by supporter score merged with the aggregated truth; unflagged
  // tokens carry the truth alone.
  std::vector<std::vector<int>> candidates;
  // (label, mean supporter weight) pairs for flagged tokens, score-descending.
  std::vector<std::vector<std::pair<int, double>>> label_scores;

  Matrix cf;
  std::vector<bool> cf_row_undefined;  // labels never appearing as truth
};

// Full ambiguity analysis against the reliable cluster. `lengths` gives the
// sequence lengths of the corpus the annotations cover; `truth` is flat per
// token, `cluster` per annotator.
AmbiguityResult analyze_ambiguity(const CrowdAnnotations& crowd,
                                  const std::vector<std::size_t>& lengths,
                                  const std::vector<int>& cluster, int reliable_cluster,
                                  const std::vector<int>& truth, int num_labels,
                                  const AmbiguityConfig& config);

// Symmetrized label-pair confusability from candidate sets: the directed rate
// p(i, j) is the fraction of truth-i tokens whose candidates include j; the
// matrix averages the two directions and has a zero diagonal. Labels that
// never occur as truth give zero rows, reported via `row_undefined`.
Matrix build_cf(const std::vector<std::vector<int>>& candidates, const std::vector<int>& truth,
                int num_labels, std::vector<bool>* row_undefined = nullptr);

void write_cf(const Matrix& cf, const LabelSet& labels, const std::string& path);
// Reads a confusability matrix into `labels` id space, matching by name;
// names absent from `labels` are dropped, pairs absent from the file are 0.
Matrix load_cf(const std::string& path, const LabelSet& labels);

void write_mu(const AmbiguityResult& result, const std::vector<std::size_t>& lengths,
              const std::string& path);
void write_flagged(const AmbiguityResult& result, const std::vector<std::size_t>& lengths,
                   const std::string& path);
std::vector<std::pair<int, int>> load_flagged(const std::string& path);
void write_candidates(const AmbiguityResult& result, const std::vector<std::size_t>& lengths,
                      const LabelSet& labels, const std::string& path);
// (sequence, position, ordered candidate ids); names are interned into `labels`.
std::vector<std::tuple<int, int, std::vector<int>>> load_candidates(const std::string& path,
                                                                    LabelSet& labels);

}  // namespace crowdlab

#endif  // CROWDLAB_AMBIGUITY_HPP_
