#include "crowdlab/crowd.hpp"

#include <algorithm>
#include <sstream>

#include "crowdlab/error.hpp"
#include "tsv.hpp"

namespace crowdlab {

CrowdAnnotations CrowdAnnotations::build(std::vector<Annotation> entries,
                                         const std::vector<std::size_t>& sequence_lengths,
                                         int num_annotators) {
  CrowdAnnotations out;
  std::vector<std::size_t> offsets(sequence_lengths.size() + 1, 0);
  for (std::size_t s = 0; s < sequence_lengths.size(); ++s)
    offsets[s + 1] = offsets[s] + sequence_lengths[s];
  const std::size_t num_tokens = offsets.back();

  int max_annotator = -1;
  for (const auto& a : entries) {
    if (a.sequence < 0 || static_cast<std::size_t>(a.sequence) >= sequence_lengths.size())
      throw Error("annotation sequence id out of range: " + std::to_string(a.sequence));
    if (a.position < 0 ||
        static_cast<std::size_t>(a.position) >= sequence_lengths[static_cast<std::size_t>(a.sequence)])
      throw Error("annotation position out of range: sequence " + std::to_string(a.sequence) +
                  ", position " + std::to_string(a.position));
    if (a.annotator < 0)
      throw Error("negative annotator id: " + std::to_string(a.annotator));
    max_annotator = std::max(max_annotator, a.annotator);
  }
  if (num_annotators == 0) num_annotators = max_annotator + 1;
  if (max_annotator >= num_annotators)
    throw Error("annotator id " + std::to_string(max_annotator) + " exceeds annotator count " +
                std::to_string(num_annotators));
  out.num_annotators_ = num_annotators;

  std::sort(entries.begin(), entries.end(), [](const Annotation& a, const Annotation& b) {
    if (a.sequence != b.sequence) return a.sequence < b.sequence;
    if (a.position != b.position) return a.position < b.position;
    return a.annotator < b.annotator;
  });
  for (std::size_t i = 1; i < entries.size(); ++i) {
    const auto& p = entries[i - 1];
    const auto& q = entries[i];
    if (p.sequence == q.sequence && p.position == q.position && p.annotator == q.annotator)
      throw Error("duplicate annotation: annotator " + std::to_string(q.annotator) +
                  " at (" + std::to_string(q.sequence) + ", " + std::to_string(q.position) + ")");
  }

  out.by_token_.assign(num_tokens, {});
  out.by_annotator_.assign(static_cast<std::size_t>(num_annotators), {});
  for (const auto& a : entries) {
    const std::size_t flat = offsets[static_cast<std::size_t>(a.sequence)] +
                             static_cast<std::size_t>(a.position);
    out.by_token_[flat].emplace_back(a.annotator, a.label);
    out.by_annotator_[static_cast<std::size_t>(a.annotator)].emplace_back(flat, a.label);
  }
  out.entries_ = std::move(entries);
  return out;
}

std::vector<std::size_t> CrowdAnnotations::uncovered_tokens() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < by_token_.size(); ++i)
    if (by_token_[i].empty()) out.push_back(i);
  return out;
}

CrowdAnnotations load_crowd(const std::string& path, const Corpus& corpus,
                            const LabelSet& labels) {
  std::vector<std::size_t> lengths;
  lengths.reserve(corpus.sequences.size());
  for (const auto& s : corpus.sequences) lengths.push_back(s.tokens.size());

  std::vector<Annotation> entries;
  const auto all = tsv::lines(tsv::read_file(path));
  for (std::size_t i = 0; i < all.size(); ++i) {
    const std::string& line = all[i];
    const std::size_t line_no = i + 1;
    if (line.empty()) continue;
    const auto cols = tsv::fields(line);
    if (cols.size() != 4)
      throw ParseError(path, line_no, "expected 4 columns, got " + std::to_string(cols.size()));
    Annotation a;
    a.sequence = static_cast<int>(tsv::parse_int(cols[0], path, line_no));
    a.position = static_cast<int>(tsv::parse_int(cols[1], path, line_no));
    a.annotator = static_cast<int>(tsv::parse_int(cols[2], path, line_no));
    const auto label = labels.find(cols[3]);
    if (!label) throw ParseError(path, line_no, "unknown label \"" + cols[3] + "\"");
    a.label = *label;
    if (a.sequence < 0 || static_cast<std::size_t>(a.sequence) >= lengths.size())
      throw ParseError(path, line_no, "sequence id out of range: " + cols[0]);
    if (a.position < 0 ||
        static_cast<std::size_t>(a.position) >= lengths[static_cast<std::size_t>(a.sequence)])
      throw ParseError(path, line_no, "position out of range: " + cols[1]);
    if (a.annotator < 0) throw ParseError(path, line_no, "negative annotator id: " + cols[2]);
    entries.push_back(a);
  }
  auto crowd = CrowdAnnotations::build(std::move(entries), lengths);
  const auto uncovered = crowd.uncovered_tokens();
  if (!uncovered.empty())
    throw Error(path + ": " + std::to_string(uncovered.size()) +
                " tokens have no annotations (first flat index " +
                std::to_string(uncovered.front()) + ")");
  return crowd;
}

void write_crowd(const CrowdAnnotations& crowd, const LabelSet& labels,
                 const std::string& path) {
  std::ostringstream out;
  for (const auto& a : crowd.entries()) {
    out << a.sequence << '\t' << a.position << '\t' << a.annotator << '\t'
        << labels.name(a.label) << '\n';
  }
  tsv::write_file(path, out.str());
}

}  // namespace crowdlab
