#include <cctype>

#include "crowdlab/crf.hpp"
#include "crowdlab/error.hpp"

namespace crowdlab {

int FeatureMap::intern(const std::string& key) {
  auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  const int id = static_cast<int>(keys_.size());
  keys_.push_back(key);
  index_.emplace(key, id);
  return id;
}

std::optional<int> FeatureMap::find(const std::string& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

FeatureMap FeatureMap::from_keys(std::vector<std::string> keys) {
  FeatureMap out;
  for (auto& k : keys) {
    if (out.index_.count(k)) throw Error("duplicate feature key: " + k);
    out.index_.emplace(k, static_cast<int>(out.keys_.size()));
    out.keys_.push_back(std::move(k));
  }
  return out;
}

std::vector<std::string> token_feature_keys(const Sequence& seq, std::size_t pos,
                                            const CrfConfig& config) {
  std::vector<std::string> keys;
  const auto len = static_cast<std::ptrdiff_t>(seq.tokens.size());
  const auto p = static_cast<std::ptrdiff_t>(pos);

  for (int o = -config.window; o <= config.window; ++o) {
    const std::ptrdiff_t q = p + o;
    std::string w;
    if (q < 0) w = "<s>";
    else if (q >= len) w = "</s>";
    else w = seq.tokens[static_cast<std::size_t>(q)].surface;
    keys.push_back("w[" + std::to_string(o) + "]=" + w);
  }

  const std::string& cur = seq.tokens[pos].surface;
  std::string lower = cur;
  for (char& ch : lower)
    ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  keys.push_back("lc=" + lower);

  for (int k = 1; k <= config.affix_len; ++k) {
    if (cur.size() < static_cast<std::size_t>(k)) break;
    keys.push_back("p" + std::to_string(k) + "=" + cur.substr(0, static_cast<std::size_t>(k)));
  }
  for (int k = 1; k <= config.affix_len; ++k) {
    if (cur.size() < static_cast<std::size_t>(k)) break;
    keys.push_back("s" + std::to_string(k) + "=" +
                   cur.substr(cur.size() - static_cast<std::size_t>(k)));
  }

  bool digit = false;
  for (char ch : cur)
    if (std::isdigit(static_cast<unsigned char>(ch))) { digit = true; break; }
  if (digit) keys.push_back("hasdigit");
  if (!cur.empty() && std::isupper(static_cast<unsigned char>(cur[0])))
    keys.push_back("capitalized");

  return keys;
}

std::vector<EncodedSequence> encode_sequences(const Corpus& corpus,
                                              const std::vector<int>& labels, CrfModel& model,
                                              bool build) {
  const bool with_truth = !labels.empty();
  if (with_truth && labels.size() != corpus.token_count())
    throw Error("training label vector does not match corpus token count");

  std::vector<EncodedSequence> out;
  out.reserve(corpus.sequences.size());
  std::size_t flat = 0;
  for (const auto& seq : corpus.sequences) {
    EncodedSequence enc;
    enc.tokens.reserve(seq.tokens.size());
    for (std::size_t k = 0; k < seq.tokens.size(); ++k, ++flat) {
      EncodedToken tok;
      for (const auto& key : token_feature_keys(seq, k, model.config)) {
        if (build) {
          tok.rows.push_back(model.features.intern(key));
        } else if (auto row = model.features.find(key)) {
          tok.rows.push_back(*row);
        }
      }
      if (with_truth) {
        tok.truth = labels[flat];
        if (tok.truth < 0 || tok.truth >= model.num_labels())
          throw Error("training label out of range at flat token " + std::to_string(flat));
      }
      enc.tokens.push_back(std::move(tok));
    }
    out.push_back(std::move(enc));
  }
  if (build) model.weights.assign(model.num_weights(), 0.0);
  return out;
}

}  // namespace crowdlab
