#pragma once

#include "rulgn/experiment.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace rulgn {

/// Non-stationary Gamma-increment degradation process on t in [0,1].
/// Increment shape grows as 0.02 + t^c with a per-experiment exponent c;
/// failure is the first step where the accumulated damage reaches the
/// threshold. Negative threshold/noise values request auto-derivation.
struct SimProcessConfig {
  int n_steps = 1000;              // nominal steps spanning t in [0,1]
  double increment_rate = 50.0;    // rate of the Gamma increments
  double failure_threshold = -1;   // z_f; < 0 -> calibrated (see below)
  double c_mean = 1.0;
  double c_std = 0.15;
  double latent_noise_std = -1;    // sigma_z; < 0 -> 0.02 * z_f
  double obs_noise_std = 0.1;      // sigma_x
  int segment_length = 1000;
  int spike_count = 20;
  double spike_a0 = 0.5;
  double spike_a1 = 2.0;
  uint64_t seed = 1;

  void validate() const;
};

/// Increment shape alpha(t, c) = 0.02 + t^c.
double increment_shape(double t, double c);

/// One Gamma(alpha(t,c), rate) increment draw.
double sample_increment(double t, double c, double rate, std::mt19937_64& rng);

struct LatentPath {
  std::vector<double> z;  // cumulative damage, one entry per simulated step
  int failure_step = -1;  // first index with z >= z_f; -1 if never reached
};

/// Simulates until the threshold is crossed or n_steps runs out.
LatentPath simulate_latent(const SimProcessConfig& cfg, double c, std::mt19937_64& rng);

/// Threshold such that the median pilot path crosses near 0.55 * n_steps,
/// which puts the median failure step inside [0.3, 0.8] * n_steps.
double calibrate_failure_threshold(const SimProcessConfig& cfg, int pilot_runs = 500);

/// Raw observation: Gaussian noise floor plus `spike_count` spikes placed
/// uniformly without replacement, amplitude +-(a0 + a1 * z^2).
Tensor emit_segment(double z_tilde, const SimProcessConfig& cfg, std::mt19937_64& rng);

struct SimDataset {
  ExperimentSet train;
  ExperimentSet test;
  double resolved_failure_threshold = 0.0;
  double resolved_latent_noise_std = 0.0;
};

SimDataset generate_dataset(const SimProcessConfig& cfg, int n_train = 12, int n_test = 3);

/// On-disk layout: <root>/{train,test}/<id>/ with a plain-text `meta` file
/// and one little-endian binary blob (shape header + doubles) per segment.
void save_experiments(const std::string& root, const ExperimentSet& train,
                      const ExperimentSet& test);

struct DiskDataset {
  ExperimentSet train;
  ExperimentSet test;
};
DiskDataset load_dataset(const std::string& root);

}  // namespace rulgn
