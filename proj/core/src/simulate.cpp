#include "crowdlab/simulate.hpp"

#include <algorithm>
#include <sstream>

#include "crowdlab/error.hpp"
#include "crowdlab/rng.hpp"
#include "stream_ids.hpp"
#include "tsv.hpp"

namespace crowdlab {

SimResult simulate(const Corpus& corpus, const SimPlan& plan) {
  const int T = corpus.labels.size();
  if (T < 2) throw Error("simulation needs at least 2 labels, corpus has " + std::to_string(T));
  if (plan.groups.empty()) throw Error("simulation plan has no annotator groups");

  int L = 0;
  for (const auto& g : plan.groups) {
    if (g.count <= 0) throw Error("annotator group with non-positive count");
    if (g.lo < 0.0 || g.hi > 1.0 || g.lo > g.hi)
      throw Error("precision range outside [0, 1]");
    L += g.count;
  }

  std::vector<double> precisions;
  precisions.reserve(static_cast<std::size_t>(L));
  {
    int l = 0;
    for (const auto& g : plan.groups) {
      for (int i = 0; i < g.count; ++i, ++l) {
        RngStream rng(plan.seed, streams::kSimPrecision, static_cast<std::uint64_t>(l));
        precisions.push_back(rng.uniform(g.lo, g.hi));
      }
    }
  }

  std::vector<int> gold;
  std::vector<std::size_t> lengths;
  gold.reserve(corpus.token_count());
  for (const auto& seq : corpus.sequences) {
    lengths.push_back(seq.tokens.size());
    for (const auto& tok : seq.tokens) gold.push_back(tok.gold[0]);
  }

  // Each annotator has its own label stream, so annotators can be simulated
  // in any order (or in parallel) with identical output.
  std::vector<Annotation> entries;
  entries.reserve(static_cast<std::size_t>(L) * gold.size());
  for (int l = 0; l < L; ++l) {
    RngStream rng(plan.seed, streams::kSimLabels, static_cast<std::uint64_t>(l));
    std::size_t flat = 0;
    for (std::size_t s = 0; s < corpus.sequences.size(); ++s) {
      const std::size_t len = corpus.sequences[s].tokens.size();
      for (std::size_t k = 0; k < len; ++k, ++flat) {
        const int g = gold[flat];
        int label = g;
        if (rng.next_double() >= precisions[static_cast<std::size_t>(l)]) {
          int wrong = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(T - 1)));
          if (wrong >= g) ++wrong;
          label = wrong;
        }
        entries.push_back(Annotation{static_cast<int>(s), static_cast<int>(k), l, label});
      }
    }
  }

  SimResult out{CrowdAnnotations::build(std::move(entries), lengths, L), std::move(precisions)};
  return out;
}

std::vector<int> parse_group_counts(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const long v = tsv::parse_int(item, "<groups>", 1);
    if (v <= 0) throw Error("group count must be positive: " + item);
    out.push_back(static_cast<int>(v));
  }
  if (out.empty()) throw Error("empty group list");
  return out;
}

std::vector<std::pair<double, double>> parse_precision_ranges(const std::string& text) {
  std::vector<std::pair<double, double>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw Error("range must be LO:HI, got " + item);
    double a = tsv::parse_double(item.substr(0, colon), "<ranges>", 1);
    double b = tsv::parse_double(item.substr(colon + 1), "<ranges>", 1);
    if (a > b) std::swap(a, b);
    if (a < 0.0 || b > 1.0) throw Error("precision range outside [0, 1]: " + item);
    out.emplace_back(a, b);
  }
  if (out.empty()) throw Error("empty range list");
  return out;
}

SimPlan make_plan(const std::vector<int>& counts,
                  const std::vector<std::pair<double, double>>& ranges,
                  std::uint64_t seed) {
  if (counts.size() != ranges.size())
    throw Error("group count list and range list have different lengths");
  SimPlan plan;
  plan.seed = seed;
  for (std::size_t i = 0; i < counts.size(); ++i)
    plan.groups.push_back(AnnotatorGroup{counts[i], ranges[i].first, ranges[i].second});
  return plan;
}

void write_precisions(const std::vector<double>& precisions, const std::string& path) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t l = 0; l < precisions.size(); ++l)
    out << l << '\t' << precisions[l] << '\n';
  tsv::write_file(path, out.str());
}

std::vector<double> load_precisions(const std::string& path) {
  std::vector<double> out;
  const auto all = tsv::lines(tsv::read_file(path));
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].empty()) continue;
    const auto cols = tsv::fields(all[i]);
    if (cols.size() != 2) throw ParseError(path, i + 1, "expected 2 columns");
    const long id = tsv::parse_int(cols[0], path, i + 1);
    if (id != static_cast<long>(out.size()))
      throw ParseError(path, i + 1, "annotator ids must be dense and ordered");
    out.push_back(tsv::parse_double(cols[1], path, i + 1));
  }
  return out;
}

}  // namespace crowdlab
