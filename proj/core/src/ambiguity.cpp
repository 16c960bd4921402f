#include "crowdlab/ambiguity.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

#include "crowdlab/error.hpp"
#include "tsv.hpp"

namespace crowdlab {

Matrix agreement_matrix(const std::vector<std::vector<int>>& labels) {
  if (labels.empty()) throw Error("agreement matrix needs at least one row");
  const std::size_t rows = labels.size();
  const std::size_t cols = labels[0].size();
  for (const auto& r : labels)
    if (r.size() != cols) throw Error("agreement matrix rows have unequal lengths");

  Matrix a(rows, cols);
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t l = 0; l < rows; ++l) {
      const int y = labels[l][j];
      if (y < 0) continue;
      int agree = 0;
      for (std::size_t r = 0; r < rows; ++r)
        if (labels[r][j] == y) ++agree;
      a(l, j) = static_cast<double>(agree);
    }
  }
  return a;
}

AmbiguityResult analyze_ambiguity(const CrowdAnnotations& crowd,
                                  const std::vector<std::size_t>& lengths,
                                  const std::vector<int>& cluster, int reliable_cluster,
                                  const std::vector<int>& truth, int num_labels,
                                  const AmbiguityConfig& config) {
  if (!(config.flag_fraction >= 0.0 && config.flag_fraction <= 1.0))
    throw Error("flag fraction must lie in [0, 1]");
  if (cluster.size() != static_cast<std::size_t>(crowd.num_annotators()))
    throw Error("cluster vector does not match annotator count");

  std::vector<std::size_t> offsets(lengths.size() + 1, 0);
  for (std::size_t s = 0; s < lengths.size(); ++s) offsets[s + 1] = offsets[s] + lengths[s];
  const std::size_t n_tokens = offsets.back();
  if (truth.size() != n_tokens) throw Error("truth vector does not match token count");
  if (n_tokens != crowd.num_tokens()) throw Error("sequence lengths do not match annotations");

  std::vector<bool> reliable(cluster.size(), false);
  int n_reliable = 0;
  for (std::size_t l = 0; l < cluster.size(); ++l) {
    if (cluster[l] == reliable_cluster) {
      reliable[l] = true;
      ++n_reliable;
    }
  }
  if (n_reliable == 0)
    std::cerr << "warning: reliable cluster " << reliable_cluster << " has no members\n";

  // Reliable-cluster annotations per sequence, in (position, annotator) order.
  std::vector<std::vector<Annotation>> per_seq(lengths.size());
  for (const auto& e : crowd.entries())
    if (reliable[static_cast<std::size_t>(e.annotator)])
      per_seq[static_cast<std::size_t>(e.sequence)].push_back(e);

  AmbiguityResult out;
  out.sequences.resize(lengths.size());
  out.mu.assign(n_tokens, std::numeric_limits<double>::quiet_NaN());
  out.mu_norm.assign(n_tokens, std::numeric_limits<double>::quiet_NaN());

  for (std::size_t s = 0; s < lengths.size(); ++s) {
    auto& sf = out.sequences[s];
    std::vector<int> members;
    for (const auto& e : per_seq[s]) members.push_back(e.annotator);
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    sf.annotators = members;
    if (members.size() < 2) {
      std::cerr << "warning: sequence " << s << " labeled by " << members.size()
                << " reliable annotator(s); skipping ambiguity scoring\n";
      continue;
    }
    sf.eligible = true;

    std::vector<std::vector<int>> labels(members.size(), std::vector<int>(lengths[s], -1));
    for (const auto& e : per_seq[s]) {
      const auto row = static_cast<std::size_t>(
          std::lower_bound(members.begin(), members.end(), e.annotator) - members.begin());
      labels[row][static_cast<std::size_t>(e.position)] = e.label;
    }
    sf.factor = rank1_factorize(agreement_matrix(labels));
    if (!sf.factor.converged)
      std::cerr << "warning: rank-1 factorization did not converge for sequence " << s << "\n";

    double max_mu = 0.0;
    for (std::size_t j = 0; j < lengths[s]; ++j) max_mu = std::max(max_mu, sf.factor.col[j]);
    for (std::size_t j = 0; j < lengths[s]; ++j) {
      const std::size_t flat = offsets[s] + j;
      out.mu[flat] = sf.factor.col[j];
      out.mu_norm[flat] = max_mu > 0.0 ? sf.factor.col[j] / max_mu : sf.factor.col[j];
    }
    out.eligible_tokens += lengths[s];
  }

  // Global bottom-fraction flagging over eligible tokens; ties keep corpus
  // order so the flag set is deterministic.
  std::vector<std::size_t> order;
  order.reserve(out.eligible_tokens);
  for (std::size_t i = 0; i < n_tokens; ++i)
    if (!std::isnan(out.mu[i])) order.push_back(i);
  const auto& key = config.normalize ? out.mu_norm : out.mu;
  std::stable_sort(order.begin(), order.end(),
                   [&key](std::size_t a, std::size_t b) { return key[a] < key[b]; });
  const auto n_flag = static_cast<std::size_t>(config.flag_fraction *
                                               static_cast<double>(out.eligible_tokens));
  out.flagged.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(
                                                        std::min(n_flag, order.size())));
  std::sort(out.flagged.begin(), out.flagged.end());

  out.candidates.resize(n_tokens);
  out.label_scores.resize(n_tokens);
  for (std::size_t i = 0; i < n_tokens; ++i) {
    if (truth[i] < 0 || truth[i] >= num_labels) throw Error("truth label out of range");
    out.candidates[i] = {truth[i]};
  }
  for (std::size_t flat : out.flagged) {
    const auto s = static_cast<std::size_t>(
        std::upper_bound(offsets.begin(), offsets.end(), flat) - offsets.begin() - 1);
    const std::size_t j = flat - offsets[s];
    const auto& sf = out.sequences[s];

    // Mean factor weight of the supporters of each observed label.
    std::vector<double> score(static_cast<std::size_t>(num_labels), 0.0);
    std::vector<int> supporters(static_cast<std::size_t>(num_labels), 0);
    for (const auto& e : per_seq[s]) {
      if (static_cast<std::size_t>(e.position) != j) continue;
      const auto row = static_cast<std::size_t>(
          std::lower_bound(sf.annotators.begin(), sf.annotators.end(), e.annotator) -
          sf.annotators.begin());
      score[static_cast<std::size_t>(e.label)] += sf.factor.row[row];
      ++supporters[static_cast<std::size_t>(e.label)];
    }
    std::vector<std::pair<int, double>> ranked;
    for (int y = 0; y < num_labels; ++y)
      if (supporters[static_cast<std::size_t>(y)] > 0)
        ranked.emplace_back(y, score[static_cast<std::size_t>(y)] /
                                   supporters[static_cast<std::size_t>(y)]);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    out.label_scores[flat] = ranked;

    std::vector<int> cands;
    for (std::size_t k = 0; k < ranked.size() && k < 2; ++k) cands.push_back(ranked[k].first);
    if (std::find(cands.begin(), cands.end(), truth[flat]) == cands.end())
      cands.push_back(truth[flat]);
    out.candidates[flat] = std::move(cands);
  }

  out.cf = build_cf(out.candidates, truth, num_labels, &out.cf_row_undefined);
  return out;
}

Matrix build_cf(const std::vector<std::vector<int>>& candidates, const std::vector<int>& truth,
                int num_labels, std::vector<bool>* row_undefined) {
  if (candidates.size() != truth.size())
    throw Error("candidate list count does not match truth count");
  const auto T = static_cast<std::size_t>(num_labels);
  Matrix directed(T, T);
  std::vector<double> denom(T, 0.0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i];
    if (t < 0 || t >= num_labels) throw Error("truth label out of range");
    denom[static_cast<std::size_t>(t)] += 1.0;
    for (int y : candidates[i]) {
      if (y < 0 || y >= num_labels) throw Error("candidate label out of range");
      if (y != t) directed(static_cast<std::size_t>(t), static_cast<std::size_t>(y)) += 1.0;
    }
  }
  if (row_undefined != nullptr) row_undefined->assign(T, false);
  for (std::size_t t = 0; t < T; ++t) {
    if (denom[t] == 0.0) {
      if (row_undefined != nullptr) (*row_undefined)[t] = true;
      continue;
    }
    for (std::size_t y = 0; y < T; ++y) directed(t, y) /= denom[t];
  }
  Matrix cf(T, T);
  for (std::size_t i = 0; i < T; ++i)
    for (std::size_t j = 0; j < T; ++j)
      if (i != j) cf(i, j) = 0.5 * (directed(i, j) + directed(j, i));
  return cf;
}

namespace {

std::ostringstream make_stream() {
  std::ostringstream out;
  out.precision(17);
  return out;
}

}  // namespace

void write_cf(const Matrix& cf, const LabelSet& labels, const std::string& path) {
  if (cf.rows() != static_cast<std::size_t>(labels.size()) || cf.rows() != cf.cols())
    throw Error("confusability matrix does not match label set");
  auto out = make_stream();
  for (int t = 0; t < labels.size(); ++t) {
    if (t > 0) out << '\t';
    out << labels.name(t);
  }
  out << '\n';
  for (std::size_t i = 0; i < cf.rows(); ++i) {
    for (std::size_t j = 0; j < cf.cols(); ++j) {
      if (j > 0) out << '\t';
      out << cf(i, j);
    }
    out << '\n';
  }
  tsv::write_file(path, out.str());
}

Matrix load_cf(const std::string& path, const LabelSet& labels) {
  const auto all = tsv::lines(tsv::read_file(path));
  if (all.empty()) throw Error(path + ": empty confusability file");
  const auto names = tsv::fields(all[0]);
  std::vector<int> target(names.size(), -1);
  for (std::size_t k = 0; k < names.size(); ++k) {
    const auto id = labels.find(names[k]);
    if (id) target[k] = *id;
  }
  Matrix cf(static_cast<std::size_t>(labels.size()), static_cast<std::size_t>(labels.size()));
  std::size_t row = 0;
  for (std::size_t i = 1; i < all.size(); ++i) {
    if (all[i].empty()) continue;
    const auto cols = tsv::fields(all[i]);
    if (cols.size() != names.size())
      throw ParseError(path, i + 1, "expected " + std::to_string(names.size()) + " columns");
    if (row >= names.size()) throw ParseError(path, i + 1, "more rows than header labels");
    if (target[row] >= 0) {
      for (std::size_t j = 0; j < cols.size(); ++j) {
        if (target[j] < 0) continue;
        cf(static_cast<std::size_t>(target[row]), static_cast<std::size_t>(target[j])) =
            tsv::parse_double(cols[j], path, i + 1);
      }
    }
    ++row;
  }
  if (row != names.size())
    throw Error(path + ": expected " + std::to_string(names.size()) + " rows, got " +
                std::to_string(row));
  return cf;
}

namespace {

std::pair<std::size_t, std::size_t> locate(const std::vector<std::size_t>& offsets,
                                           std::size_t flat) {
  const auto s = static_cast<std::size_t>(
      std::upper_bound(offsets.begin(), offsets.end(), flat) - offsets.begin() - 1);
  return {s, flat - offsets[s]};
}

std::vector<std::size_t> make_offsets(const std::vector<std::size_t>& lengths) {
  std::vector<std::size_t> offsets(lengths.size() + 1, 0);
  for (std::size_t s = 0; s < lengths.size(); ++s) offsets[s + 1] = offsets[s] + lengths[s];
  return offsets;
}

}  // namespace

void write_mu(const AmbiguityResult& result, const std::vector<std::size_t>& lengths,
              const std::string& path) {
  const auto offsets = make_offsets(lengths);
  auto out = make_stream();
  for (std::size_t flat = 0; flat < result.mu.size(); ++flat) {
    if (std::isnan(result.mu[flat])) continue;
    const auto [s, j] = locate(offsets, flat);
    out << s << '\t' << j << '\t' << result.mu[flat] << '\t' << result.mu_norm[flat] << '\n';
  }
  tsv::write_file(path, out.str());
}

void write_flagged(const AmbiguityResult& result, const std::vector<std::size_t>& lengths,
                   const std::string& path) {
  const auto offsets = make_offsets(lengths);
  auto out = make_stream();
  for (std::size_t flat : result.flagged) {
    const auto [s, j] = locate(offsets, flat);
    out << s << '\t' << j << '\n';
  }
  tsv::write_file(path, out.str());
}

std::vector<std::pair<int, int>> load_flagged(const std::string& path) {
  std::vector<std::pair<int, int>> out;
  const auto all = tsv::lines(tsv::read_file(path));
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].empty()) continue;
    const auto cols = tsv::fields(all[i]);
    if (cols.size() != 2) throw ParseError(path, i + 1, "expected 2 columns");
    out.emplace_back(static_cast<int>(tsv::parse_int(cols[0], path, i + 1)),
                     static_cast<int>(tsv::parse_int(cols[1], path, i + 1)));
  }
  return out;
}

void write_candidates(const AmbiguityResult& result, const std::vector<std::size_t>& lengths,
                      const LabelSet& labels, const std::string& path) {
  const auto offsets = make_offsets(lengths);
  auto out = make_stream();
  for (std::size_t flat : result.flagged) {
    const auto [s, j] = locate(offsets, flat);
    const auto& scored = result.label_scores[flat];
    for (int cand : result.candidates[flat]) {
      double score = 0.0;
      for (const auto& [label, value] : scored)
        if (label == cand) score = value;
      out << s << '\t' << j << '\t' << labels.name(cand) << '\t' << score << '\n';
    }
  }
  tsv::write_file(path, out.str());
}

std::vector<std::tuple<int, int, std::vector<int>>> load_candidates(const std::string& path,
                                                                    LabelSet& labels) {
  std::vector<std::tuple<int, int, std::vector<int>>> out;
  const auto all = tsv::lines(tsv::read_file(path));
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].empty()) continue;
    const auto cols = tsv::fields(all[i]);
    if (cols.size() != 4) throw ParseError(path, i + 1, "expected 4 columns");
    const auto s = static_cast<int>(tsv::parse_int(cols[0], path, i + 1));
    const auto j = static_cast<int>(tsv::parse_int(cols[1], path, i + 1));
    if (cols[2].empty()) throw ParseError(path, i + 1, "empty candidate label");
    tsv::parse_double(cols[3], path, i + 1);  // validated, score is informational
    const int label = labels.intern(cols[2]);
    if (out.empty() || std::get<0>(out.back()) != s || std::get<1>(out.back()) != j)
      out.emplace_back(s, j, std::vector<int>{});
    std::get<2>(out.back()).push_back(label);
  }
  return out;
}

}  // namespace crowdlab
