#include "rulgn/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rulgn {

void Experiment::validate() const {
  if (timestamps.size() != segments.size()) {
    throw std::invalid_argument("experiment " + id + ": timestamps and segments differ in count");
  }
  for (size_t k = 1; k < timestamps.size(); ++k) {
    if (!(timestamps[k] > timestamps[k - 1])) {
      throw std::invalid_argument("experiment " + id + ": timestamps not strictly increasing");
    }
  }
  if (!timestamps.empty() && failure_time < timestamps.back()) {
    throw std::invalid_argument("experiment " + id + ": failure time precedes last observation");
  }
}

void SamplerConfig::validate() const {
  if (!(window > min_spacing && min_spacing > 0)) {
    throw std::invalid_argument("sampler config: require window > min_spacing > 0");
  }
  if (schedule.empty()) throw std::invalid_argument("sampler config: empty schedule");
  for (int s : schedule) {
    if (s < 1) throw std::invalid_argument("sampler config: schedule entries must be >= 1");
  }
}

AttributedGraph build_causal_graph(const std::vector<double>& times,
                                   const std::vector<Tensor>& segments,
                                   bool include_self_edges) {
  if (times.empty() || times.size() != segments.size()) {
    throw std::invalid_argument("build_causal_graph: need one segment per time");
  }
  for (size_t i = 1; i < times.size(); ++i) {
    if (times[i] == times[i - 1]) throw std::invalid_argument("build_causal_graph: duplicate timestamps");
    if (times[i] < times[i - 1]) throw std::invalid_argument("build_causal_graph: times not sorted");
  }
  const int n = static_cast<int>(times.size());
  const int width = segments[0].size();
  Array nodes(n * width);
  for (int i = 0; i < n; ++i) {
    if (segments[i].size() != width) {
      throw std::invalid_argument("build_causal_graph: segments differ in size");
    }
    nodes.segment(i * width, width) = segments[i].values();
  }

  std::vector<int> senders, receivers;
  std::vector<double> dts;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      senders.push_back(i);
      receivers.push_back(j);
      dts.push_back(times[j] - times[i]);
    }
  }
  if (include_self_edges) {
    for (int i = 0; i < n; ++i) {
      senders.push_back(i);
      receivers.push_back(i);
      dts.push_back(0.0);
    }
  }
  const int e = static_cast<int>(dts.size());
  Array edge_vals(e);
  for (int k = 0; k < e; ++k) edge_vals[k] = dts[k];

  AttributedGraph g;
  g.node_attrs = Tensor({n, width}, std::move(nodes));
  g.edge_attrs = Tensor({e, 1}, std::move(edge_vals));
  g.senders = std::move(senders);
  g.receivers = std::move(receivers);
  return g;
}

namespace {

std::vector<int> positive_rul_indices(const Experiment& exp) {
  std::vector<int> idx;
  for (int k = 0; k < exp.num_observations(); ++k) {
    if (exp.rul_at(k) > 0.0) idx.push_back(k);
  }
  return idx;
}

CausalSample sample_at_anchor(const Experiment& exp, const SamplerConfig& cfg, int anchor,
                              int n_past, std::mt19937_64& rng) {
  const double t_last = exp.timestamps[anchor];

  std::vector<int> candidates;
  for (int k = 0; k < anchor; ++k) {
    if (exp.timestamps[k] >= t_last - cfg.window) candidates.push_back(k);
  }
  std::shuffle(candidates.begin(), candidates.end(), rng);

  std::vector<int> chosen = {anchor};
  for (int cand : candidates) {
    if (static_cast<int>(chosen.size()) >= n_past) break;
    const double tc = exp.timestamps[cand];
    const bool spaced = std::all_of(chosen.begin(), chosen.end(), [&](int c) {
      return std::abs(exp.timestamps[c] - tc) >= cfg.min_spacing;
    });
    if (spaced) chosen.push_back(cand);
  }
  std::sort(chosen.begin(), chosen.end());

  std::vector<double> times;
  std::vector<Tensor> segments;
  for (int c : chosen) {
    times.push_back(exp.timestamps[c]);
    segments.push_back(exp.segments[c]);
  }

  CausalSample s;
  s.graph = build_causal_graph(times, segments, cfg.include_self_edges);
  s.times = std::move(times);
  s.readout = static_cast<int>(chosen.size()) - 1;
  s.target = exp.rul_at(anchor);
  s.experiment = exp.id;
  return s;
}

}  // namespace

CausalSample sample_training_graph(const Experiment& exp, const SamplerConfig& cfg, int n_past,
                                   std::mt19937_64& rng) {
  cfg.validate();
  exp.validate();
  if (n_past < 1) throw std::invalid_argument("sample_training_graph: n_past must be >= 1");
  std::vector<int> eligible = positive_rul_indices(exp);
  if (eligible.empty()) {
    throw std::invalid_argument("sample_training_graph: experiment " + exp.id +
                                " has no pre-failure observation");
  }
  std::uniform_int_distribution<size_t> pick(0, eligible.size() - 1);
  const int anchor = eligible[pick(rng)];
  return sample_at_anchor(exp, cfg, anchor, n_past, rng);
}

int epoch_past_count(int epoch, const SamplerConfig& cfg) {
  cfg.validate();
  if (epoch < 0) throw std::invalid_argument("epoch_past_count: epoch must be >= 0");
  return cfg.schedule[epoch % cfg.schedule.size()];
}

std::vector<CausalSample> eval_graphs(const Experiment& exp, const SamplerConfig& cfg, int n_past,
                                      uint64_t seed) {
  cfg.validate();
  exp.validate();
  if (n_past <= 0) n_past = cfg.eval_past_count;
  std::vector<CausalSample> out;
  const uint64_t exp_hash = hash_string(exp.id);
  for (int anchor : positive_rul_indices(exp)) {
    std::mt19937_64 rng(derive_seed(seed, {exp_hash, static_cast<uint64_t>(anchor)}));
    out.push_back(sample_at_anchor(exp, cfg, anchor, n_past, rng));
  }
  return out;
}

}  // namespace rulgn
