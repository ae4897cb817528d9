#pragma once

#include "rulgn/tensor.hpp"

#include <string>
#include <vector>

namespace rulgn {

/// One run-to-failure record: timestamped raw segments plus the failure
/// time. Simulated and ingested experiments share this representation.
struct Experiment {
  std::string id;
  std::string condition;
  std::vector<double> timestamps;  // strictly increasing
  std::vector<Tensor> segments;    // one [C x L] per timestamp
  double failure_time = 0.0;       // >= last timestamp
  std::vector<double> latent;      // simulated data only; empty otherwise

  double rul_at(int k) const { return failure_time - timestamps.at(k); }
  int num_observations() const { return static_cast<int>(timestamps.size()); }

  void validate() const;
};

using ExperimentSet = std::vector<Experiment>;

}  // namespace rulgn
