#pragma once

#include "rulgn/experiment.hpp"

#include <map>
#include <string>

namespace rulgn {

enum class SplitSet { Train, Test };

struct SplitEntry {
  SplitSet set = SplitSet::Train;
  std::string condition;     // loading condition A, B or C
  double failure_time = 0;   // seconds
  int expected_obs = 0;      // segment count
};

/// Experiment id -> split assignment, loading condition, failure time and
/// expected observation count.
using SplitTable = std::map<std::string, SplitEntry>;

/// The 8-train / 9-test assignment used throughout, with per-experiment
/// failure times and observation counts.
SplitTable default_split();

struct FemtoOptions {
  double segment_spacing = 10.0;  // seconds between consecutive segments
  int samples_per_segment = 2556;
  bool strict_counts = false;     // any count mismatch is an error
};

struct FemtoDataset {
  ExperimentSet train;
  ExperimentSet test;
};

/// Ingests per-experiment directories of delimited-text segment files into
/// Experiment values (segments as [2 x samples] horizontal/vertical
/// acceleration). Timestamps come from segment order at `segment_spacing`
/// unless rows carry clock fields, which override the spacing. Observation
/// counts are checked against the split table: off by <= 2 warns (errors
/// under strict_counts), larger gaps always error.
FemtoDataset load_femto(const std::string& root, const SplitTable& split,
                        const FemtoOptions& options = {});

}  // namespace rulgn
