#pragma once

#include "rulgn/experiment.hpp"
#include "rulgn/graph.hpp"

#include <random>
#include <string>
#include <vector>

namespace rulgn {

struct SamplerConfig {
  double window = 2000.0;       // seconds of past considered
  double min_spacing = 100.0;   // minimum pairwise gap between chosen times
  std::vector<int> schedule = {1, 2, 5, 10};
  int eval_past_count = 30;
  bool include_self_edges = false;

  void validate() const;
};

/// One training/evaluation instance: a causal observation graph, the node
/// timestamps, the readout node (latest observation) and the RUL target.
struct CausalSample {
  AttributedGraph graph;      // node attrs = flattened segments, edge attr = dt
  std::vector<double> times;  // ascending, one per node
  int readout = 0;
  double target = 0.0;        // > 0, raw time units
  std::string experiment;
};

/// Fully connected causal DAG: one edge per ordered pair i < j with
/// attribute t_j - t_i, so n(n-1)/2 edges (plus n self-edges when enabled).
AttributedGraph build_causal_graph(const std::vector<double>& times,
                                   const std::vector<Tensor>& segments,
                                   bool include_self_edges = false);

/// Uniformly chosen anchor with positive RUL plus up to n_past - 1 past
/// observations inside the window, greedily rejecting candidates closer than
/// min_spacing to an already-chosen time. Degrades to fewer nodes (never
/// fails) when the window cannot supply enough spaced observations.
CausalSample sample_training_graph(const Experiment& exp, const SamplerConfig& cfg, int n_past,
                                   std::mt19937_64& rng);

/// schedule[epoch mod schedule size]
int epoch_past_count(int epoch, const SamplerConfig& cfg);

/// One sample anchored at every positive-RUL observation, in timestamp
/// order, each drawn from a deterministic per-anchor stream. n_past <= 0
/// falls back to cfg.eval_past_count.
std::vector<CausalSample> eval_graphs(const Experiment& exp, const SamplerConfig& cfg, int n_past,
                                      uint64_t seed);

}  // namespace rulgn
