#include "crowdlab/corpus.hpp"

#include <sstream>

#include "crowdlab/error.hpp"
#include "tsv.hpp"

namespace crowdlab {

std::size_t Corpus::token_count() const {
  std::size_t n = 0;
  for (const auto& s : sequences) n += s.tokens.size();
  return n;
}

std::size_t Corpus::flat_index(std::size_t seq, std::size_t pos) const {
  std::size_t n = 0;
  for (std::size_t s = 0; s < seq; ++s) n += sequences[s].tokens.size();
  return n + pos;
}

std::vector<std::size_t> Corpus::sequence_offsets() const {
  std::vector<std::size_t> offsets(sequences.size() + 1, 0);
  for (std::size_t s = 0; s < sequences.size(); ++s)
    offsets[s + 1] = offsets[s] + sequences[s].tokens.size();
  return offsets;
}

namespace {

int intern_gold(const std::string& name, LabelSet& labels, const LabelSet* inventory,
                const std::string& path, std::size_t line_no) {
  if (name.empty()) throw ParseError(path, line_no, "empty label");
  if (inventory != nullptr) {
    auto id = inventory->find(name);
    if (!id) throw ParseError(path, line_no, "label \"" + name + "\" not in inventory");
    return *id;
  }
  return labels.intern(name);
}

}  // namespace

Corpus load_corpus(const std::string& path, const LabelSet* inventory) {
  Corpus corpus;
  if (inventory != nullptr) corpus.labels = *inventory;

  Sequence current;
  const auto all = tsv::lines(tsv::read_file(path));
  for (std::size_t i = 0; i < all.size(); ++i) {
    const std::string& line = all[i];
    const std::size_t line_no = i + 1;
    if (line.empty()) {
      if (!current.tokens.empty()) {
        corpus.sequences.push_back(std::move(current));
        current = Sequence{};
      }
      continue;
    }
    const auto cols = tsv::fields(line);
    if (cols.size() < 2 || cols.size() > 3)
      throw ParseError(path, line_no,
                       "expected 2 or 3 columns, got " + std::to_string(cols.size()));
    if (cols[0].empty()) throw ParseError(path, line_no, "empty token surface");
    Token tok;
    tok.surface = cols[0];
    tok.gold[0] = intern_gold(cols[1], corpus.labels, inventory, path, line_no);
    if (cols.size() == 3)
      tok.gold[1] = intern_gold(cols[2], corpus.labels, inventory, path, line_no);
    current.tokens.push_back(std::move(tok));
  }
  if (!current.tokens.empty()) corpus.sequences.push_back(std::move(current));
  if (corpus.sequences.empty()) throw Error("empty corpus: " + path);
  return corpus;
}

void write_labels(const Corpus& corpus, const std::vector<int>& labels,
                  const LabelSet& label_names, const std::string& path) {
  if (labels.size() != corpus.token_count())
    throw Error("label vector size " + std::to_string(labels.size()) +
                " does not match corpus token count " + std::to_string(corpus.token_count()));
  std::ostringstream out;
  std::size_t flat = 0;
  for (std::size_t s = 0; s < corpus.sequences.size(); ++s) {
    if (s > 0) out << '\n';
    for (const auto& tok : corpus.sequences[s].tokens) {
      out << tok.surface << '\t' << label_names.name(labels[flat++]) << '\n';
    }
  }
  tsv::write_file(path, out.str());
}

void write_corpus(const Corpus& corpus, const std::string& path) {
  std::ostringstream out;
  for (std::size_t s = 0; s < corpus.sequences.size(); ++s) {
    if (s > 0) out << '\n';
    for (const auto& tok : corpus.sequences[s].tokens) {
      out << tok.surface << '\t' << corpus.labels.name(tok.gold[0]);
      if (tok.doubly_gold()) out << '\t' << corpus.labels.name(tok.gold[1]);
      out << '\n';
    }
  }
  tsv::write_file(path, out.str());
}

std::vector<int> load_labels(const std::string& path, const Corpus& corpus,
                             LabelSet& labels) {
  const Corpus as_corpus = load_corpus(path);
  if (as_corpus.sequences.size() != corpus.sequences.size())
    throw Error(path + ": sequence count " + std::to_string(as_corpus.sequences.size()) +
                " does not match corpus (" + std::to_string(corpus.sequences.size()) + ")");
  std::vector<int> out;
  out.reserve(corpus.token_count());
  for (std::size_t s = 0; s < corpus.sequences.size(); ++s) {
    const auto& got = as_corpus.sequences[s].tokens;
    const auto& want = corpus.sequences[s].tokens;
    if (got.size() != want.size())
      throw Error(path + ": sequence " + std::to_string(s) + " has " +
                  std::to_string(got.size()) + " tokens, corpus has " +
                  std::to_string(want.size()));
    for (std::size_t k = 0; k < got.size(); ++k) {
      if (got[k].surface != want[k].surface)
        throw Error(path + ": token (" + std::to_string(s) + ", " + std::to_string(k) +
                    ") surface \"" + got[k].surface + "\" does not match corpus \"" +
                    want[k].surface + "\"");
      out.push_back(labels.intern(as_corpus.labels.name(got[k].gold[0])));
    }
  }
  return out;
}

}  // namespace crowdlab
