#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <tuple>

#include "crowdlab/error.hpp"
#include "crowdlab/evaluate.hpp"

namespace crowdlab {

double token_accuracy(const std::vector<int>& predicted, const std::vector<int>& gold) {
  if (predicted.size() != gold.size() || predicted.empty())
    throw Error("accuracy needs two aligned non-empty labelings");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i)
    if (predicted[i] == gold[i]) ++hit;
  return static_cast<double>(hit) / static_cast<double>(predicted.size());
}

namespace {

struct Span {
  int sequence;
  int start;
  int end;  // exclusive
  int type;
  auto operator<=>(const Span&) const = default;
};

// type id for chunking: for B-X/I-X labels the id of X within `types`,
// otherwise the label id itself; -1 means outside.
std::vector<Span> extract_spans(const std::vector<int>& labels,
                                const std::vector<int>& sequence_lengths, bool bio,
                                const std::vector<std::pair<char, int>>& parsed) {
  std::vector<Span> spans;
  std::size_t flat = 0;
  for (std::size_t s = 0; s < sequence_lengths.size(); ++s) {
    const int len = sequence_lengths[s];
    int open_type = -1, open_start = -1;
    for (int k = 0; k < len; ++k, ++flat) {
      const int lab = labels[flat];
      char tag = 'B';
      int type = lab;
      if (bio) {
        tag = parsed[static_cast<std::size_t>(lab)].first;
        type = parsed[static_cast<std::size_t>(lab)].second;
      }
      const bool continues = bio && tag == 'I' && open_type == type && open_type >= 0;
      const bool run_continues = !bio && open_type == type;
      if (continues || run_continues) continue;
      if (open_type >= 0)
        spans.push_back({static_cast<int>(s), open_start, k, open_type});
      if (tag == 'O') {
        open_type = -1;
      } else {
        open_type = type;
        open_start = k;
      }
    }
    if (open_type >= 0) spans.push_back({static_cast<int>(s), open_start, len, open_type});
  }
  return spans;
}

}  // namespace

SpanScore span_f1(const std::vector<int>& predicted, const std::vector<int>& gold,
                  const std::vector<int>& sequence_lengths, const LabelSet& labels) {
  if (predicted.size() != gold.size() || predicted.empty())
    throw Error("span F1 needs two aligned non-empty labelings");
  std::size_t total = 0;
  for (int len : sequence_lengths) total += static_cast<std::size_t>(len);
  if (total != predicted.size())
    throw Error("sequence lengths do not sum to the labeling length");

  bool bio = false;
  for (const auto& name : labels.names())
    if (name.rfind("B-", 0) == 0 || name.rfind("I-", 0) == 0) bio = true;

  std::vector<std::pair<char, int>> parsed(static_cast<std::size_t>(labels.size()), {'O', -1});
  if (bio) {
    LabelSet types;
    for (int i = 0; i < labels.size(); ++i) {
      const auto& name = labels.name(i);
      if (name.rfind("B-", 0) == 0)
        parsed[static_cast<std::size_t>(i)] = {'B', types.intern(name.substr(2))};
      else if (name.rfind("I-", 0) == 0)
        parsed[static_cast<std::size_t>(i)] = {'I', types.intern(name.substr(2))};
    }
  }

  const auto pred_spans = extract_spans(predicted, sequence_lengths, bio, parsed);
  const auto gold_spans = extract_spans(gold, sequence_lengths, bio, parsed);
  const std::set<Span> gold_set(gold_spans.begin(), gold_spans.end());

  SpanScore score;
  score.predicted_spans = static_cast<int>(pred_spans.size());
  score.gold_spans = static_cast<int>(gold_spans.size());
  for (const auto& sp : pred_spans)
    if (gold_set.count(sp)) ++score.matched;
  if (score.predicted_spans > 0)
    score.precision = static_cast<double>(score.matched) / score.predicted_spans;
  if (score.gold_spans > 0)
    score.recall = static_cast<double>(score.matched) / score.gold_spans;
  if (score.precision + score.recall > 0.0)
    score.f1 = 2.0 * score.precision * score.recall / (score.precision + score.recall);
  return score;
}

AmbiguityScore score_ambiguity(const Corpus& corpus, const std::vector<int>& flagged,
                               const std::vector<std::vector<int>>& candidates) {
  if (candidates.size() != corpus.token_count())
    throw Error("candidate sets do not cover the corpus");
  std::vector<int> gold_amb;
  int flat = 0;
  for (const auto& seq : corpus.sequences)
    for (const auto& tok : seq.tokens) {
      if (tok.doubly_gold()) gold_amb.push_back(flat);
      ++flat;
    }
  if (gold_amb.empty()) throw Error("corpus has no doubly-labeled gold tokens to score against");

  const std::set<int> flag_set(flagged.begin(), flagged.end());
  int hit_flag = 0, hit_cand = 0;
  flat = 0;
  for (const auto& seq : corpus.sequences)
    for (const auto& tok : seq.tokens) {
      if (tok.doubly_gold()) {
        if (flag_set.count(flat)) ++hit_flag;
        const auto& cand = candidates[static_cast<std::size_t>(flat)];
        const bool has0 = std::find(cand.begin(), cand.end(), tok.gold[0]) != cand.end();
        const bool has1 = std::find(cand.begin(), cand.end(), tok.gold[1]) != cand.end();
        if (has0 && has1) ++hit_cand;
      }
      ++flat;
    }

  AmbiguityScore score;
  score.gold_ambiguous = static_cast<int>(gold_amb.size());
  score.flagged_recall = static_cast<double>(hit_flag) / score.gold_ambiguous;
  score.candidate_recall = static_cast<double>(hit_cand) / score.gold_ambiguous;
  return score;
}

CfComparison compare_confusability(const Matrix& left, const Matrix& right, int top_k) {
  if (left.rows() != left.cols() || right.rows() != right.cols() ||
      left.rows() != right.rows())
    throw Error("confusability matrices must be square and the same size");
  const std::size_t T = left.rows();
  if (T < 2) throw Error("confusability comparison needs at least two labels");

  CfComparison out;
  double acc = 0.0;
  std::size_t pairs = 0;
  std::vector<LabelPair> lv, rv;
  for (std::size_t i = 0; i < T; ++i)
    for (std::size_t j = i + 1; j < T; ++j) {
      acc += std::abs(left(i, j) - right(i, j));
      ++pairs;
      lv.push_back({static_cast<int>(i), static_cast<int>(j), left(i, j)});
      rv.push_back({static_cast<int>(i), static_cast<int>(j), right(i, j)});
    }
  out.mean_abs_diff = acc / static_cast<double>(pairs);

  auto order = [](const LabelPair& a, const LabelPair& b) {
    return std::tie(b.value, a.first, a.second) < std::tie(a.value, b.first, b.second);
  };
  std::sort(lv.begin(), lv.end(), order);
  std::sort(rv.begin(), rv.end(), order);
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(top_k), lv.size());
  out.top_left.assign(lv.begin(), lv.begin() + static_cast<std::ptrdiff_t>(k));
  out.top_right.assign(rv.begin(), rv.begin() + static_cast<std::ptrdiff_t>(k));
  return out;
}

}  // namespace crowdlab
