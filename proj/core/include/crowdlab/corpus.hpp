#ifndef CROWDLAB_CORPUS_HPP_
#define CROWDLAB_CORPUS_HPP_

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "crowdlab/label_set.hpp"

namespace crowdlab {

// One token of a sequence. gold[0] is always a valid label id after loading;
// gold[1] is -1 unless the corpus carries a second gold annotation (used for
// ambiguity evaluation).
struct Token {
  std::string surface;
  std::array<int, 2> gold{-1, -1};

  bool doubly_gold() const { return gold[1] >= 0; }
};

struct Sequence {
  std::vector<Token> tokens;
};

// A tokenized corpus plus the label inventory its gold ids index into.
struct Corpus {
  std::vector<Sequence> sequences;
  LabelSet labels;

  std::size_t token_count() const;
  // Flat token index helpers; tokens are numbered sequence-major.
  std::size_t flat_index(std::size_t seq, std::size_t pos) const;
  std::vector<std::size_t> sequence_offsets() const;
};

// Loads a TSV corpus: one token per line as "surface\tgold[\tgold2]", blank
// line between sequences, UTF-8 passed through untouched. If `inventory` is
// given, labels outside it are a validation error; otherwise the label set is
// the union of gold labels in file order.
Corpus load_corpus(const std::string& path, const LabelSet* inventory = nullptr);

// Writes tokens with a single label column (predictions, aggregated truth).
// `labels` is flat, sequence-major, one id per token.
void write_labels(const Corpus& corpus, const std::vector<int>& labels,
                  const LabelSet& label_names, const std::string& path);

// Writes the corpus back with its gold column(s); byte-exact round trip with
// load_corpus for well-formed files.
void write_corpus(const Corpus& corpus, const std::string& path);

// Per-token labels in flat order read from a labels file aligned with
// `corpus` (same sequence lengths). Label names are interned into `labels`.
std::vector<int> load_labels(const std::string& path, const Corpus& corpus,
                             LabelSet& labels);

}  // namespace crowdlab

#endif  // CROWDLAB_CORPUS_HPP_
