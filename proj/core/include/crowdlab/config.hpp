#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace crowdlab {

// Settings of a full pipeline run. File format is flat `key = value` lines,
// `#` comments; the same `key=value` strings can be layered on top as CLI
// overrides. Unknown keys are errors.
struct RunConfig {
  std::string corpus;       // gold training corpus (drives simulation too)
  std::string test_corpus;  // optional held-out corpus for predict/evaluate
  std::string out_dir = "run";
  std::optional<std::uint64_t> seed;  // mandatory

  // Simulated annotator pool.
  std::string groups = "8,4,3";
  std::string ranges = "0.9:0.7,0.7:0.4,0.4:0.1";

  // Aggregation. A positive `clusters` fixes the count; otherwise it is
  // selected over [select_min, select_max] by BIC.
  int clusters = 0;
  int select_min = 2;
  int select_max = 5;
  int burn_in = 200;
  int samples = 300;
  int thin = 2;
  int mh_steps = 20;
  bool corrected_mh = false;
  double lambda = 2.0;
  double alpha_diag = 0.7;
  double alpha_off = 0.3;
  double eps_nu = 1.0;
  double eps_gamma = 1.0;

  // Ambiguity extraction.
  double flag_fraction = 0.10;
  bool normalize = true;

  // Sequence labeler.
  std::string mode = "cost";  // cost | cll
  double l2 = 1.0;
  int max_epochs = 200;
  double grad_tolerance = 1e-4;
  bool transitions = true;

  // Canonical one-line-per-key rendering; digest input for the manifest.
  std::string canonical() const;
};

RunConfig parse_run_config(const std::string& text, const std::string& path);
RunConfig load_run_config(const std::string& path);

// Applies one "key=value" assignment (the config-file keys).
void apply_config_override(RunConfig& config, const std::string& assignment);

// Range and value checks plus existence of referenced input files.
void validate_run_config(const RunConfig& config);

}  // namespace crowdlab
