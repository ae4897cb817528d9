#pragma once

#include "rulgn/bearings.hpp"
#include "rulgn/models.hpp"
#include "rulgn/sampler.hpp"
#include "rulgn/simdata.hpp"
#include "rulgn/trainer.hpp"

#include <string>

namespace rulgn {

/// Union of the per-module configurations, populated from a flat
/// `section.key = value` text file. Every field has a default, so an empty
/// file (or none) is a valid configuration.
struct RunConfig {
  SimProcessConfig sim;
  int sim_train_experiments = 12;
  int sim_test_experiments = 3;
  SamplerConfig sampler;
  ModelConfig model;
  TrainConfig train;
  FemtoOptions femto;

  /// Applies one key. Unknown keys and unparsable values throw
  /// std::invalid_argument.
  void apply(const std::string& key, const std::string& value);

  static RunConfig from_file(const std::string& path);
};

}  // namespace rulgn
