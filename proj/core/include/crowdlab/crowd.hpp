#ifndef CROWDLAB_CROWD_HPP_
#define CROWDLAB_CROWD_HPP_

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "crowdlab/corpus.hpp"

namespace crowdlab {

struct Annotation {
  int sequence;
  int position;
  int annotator;
  int label;
};

// Sparse crowd annotations over a corpus, indexed both by flat token and by
// annotator. Annotator ids are dense 0..L-1.
class CrowdAnnotations {
 public:
  // `entries` need not be sorted; duplicates (same annotator and token) are an
  // error. num_annotators fixes L; pass 0 to infer max id + 1.
  static CrowdAnnotations build(std::vector<Annotation> entries,
                                const std::vector<std::size_t>& sequence_lengths,
                                int num_annotators = 0);

  int num_annotators() const { return num_annotators_; }
  std::size_t num_tokens() const { return by_token_.size(); }
  std::size_t size() const { return entries_.size(); }

  // Sorted by (sequence, position, annotator).
  const std::vector<Annotation>& entries() const { return entries_; }

  // flat token -> (annotator, label), annotator ascending.
  const std::vector<std::vector<std::pair<int, int>>>& by_token() const { return by_token_; }

  // annotator -> (flat token, label), token ascending.
  const std::vector<std::vector<std::pair<std::size_t, int>>>& by_annotator() const {
    return by_annotator_;
  }

  // Tokens with no annotation at all; empty for data accepted by load_crowd.
  std::vector<std::size_t> uncovered_tokens() const;

 private:
  int num_annotators_ = 0;
  std::vector<Annotation> entries_;
  std::vector<std::vector<std::pair<int, int>>> by_token_;
  std::vector<std::vector<std::pair<std::size_t, int>>> by_annotator_;
};

// Loads "seq\tpos\tannotator\tlabel" rows (0-based ids). Labels must exist in
// `labels`; positions must be in range for `corpus`; every corpus token must
// be annotated at least once.
CrowdAnnotations load_crowd(const std::string& path, const Corpus& corpus,
                            const LabelSet& labels);

void write_crowd(const CrowdAnnotations& crowd, const LabelSet& labels,
                 const std::string& path);

}  // namespace crowdlab

#endif  // CROWDLAB_CROWD_HPP_
