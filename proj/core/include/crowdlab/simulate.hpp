#ifndef CROWDLAB_SIMULATE_HPP_
#define CROWDLAB_SIMULATE_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "crowdlab/corpus.hpp"
#include "crowdlab/crowd.hpp"

namespace crowdlab {

// One block of annotators sharing a precision range. Each member draws its
// own precision uniformly from [lo, hi].
struct AnnotatorGroup {
  int count = 0;
  double lo = 0.0;
  double hi = 1.0;
};

struct SimPlan {
  std::vector<AnnotatorGroup> groups;
  std::uint64_t seed = 0;
};

struct SimResult {
  CrowdAnnotations crowd;
  std::vector<double> precisions;  // one per annotator, drawn from its group range
};

// Full-coverage simulation: every annotator labels every token, emitting the
// gold label with its precision and otherwise a uniform draw over the other
// labels. Annotator ids run group by group in plan order. Requires at least
// two labels in the corpus inventory.
SimResult simulate(const Corpus& corpus, const SimPlan& plan);

// Parses "8,4,3" into group counts.
std::vector<int> parse_group_counts(const std::string& text);

// Parses "0.9:0.7,0.7:0.4" into per-group [lo, hi] ranges; bounds may be
// given in either order and must lie in [0, 1].
std::vector<std::pair<double, double>> parse_precision_ranges(const std::string& text);

SimPlan make_plan(const std::vector<int>& counts,
                  const std::vector<std::pair<double, double>>& ranges,
                  std::uint64_t seed);

void write_precisions(const std::vector<double>& precisions, const std::string& path);
std::vector<double> load_precisions(const std::string& path);

}  // namespace crowdlab

#endif  // CROWDLAB_SIMULATE_HPP_
