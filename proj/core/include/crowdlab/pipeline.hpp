#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "crowdlab/config.hpp"

namespace crowdlab {

struct StageStatus {
  std::string name;
  bool cached = false;
};

struct RunOutcome {
  std::vector<StageStatus> stages;
};

// Executes simulate -> aggregate -> ambiguity -> train -> predict -> evaluate
// under config.out_dir. A stage is skipped when the manifest records the same
// input digests and parameters and its outputs are intact on disk; everything
// else recomputes. Progress lines go to `log`; a stage failure throws with
// the stage named. Prediction and evaluation need a test corpus; evaluation
// of the ambiguity artifacts additionally needs double gold labels in the
// training corpus.
RunOutcome run_pipeline(const RunConfig& config, std::ostream& log);

}  // namespace crowdlab
