#pragma once

#include "rulgn/models.hpp"
#include "rulgn/simdata.hpp"

#include <map>
#include <string>
#include <vector>

namespace rulgn {

struct TrainConfig {
  double base_lr = 0.001;
  int burn_in_epochs = 10;     // linear ramp to base_lr
  double decay = 0.99;         // per-epoch factor after decay_start_epoch
  int decay_start_epoch = 40;
  int max_epochs = 300;
  int patience = 50;           // early stop after this many non-improving epochs
  double val_fraction = 0.2;   // share of sampled graphs held out per epoch
  int batch_size = 32;
  int samples_per_experiment = 64;
  double clip_norm = 10.0;     // global gradient-norm clip; <= 0 disables
  uint64_t seed = 1;
  int threads = 1;

  void validate() const;
};

/// Linear burn-in, plateau, then exponential decay.
double lr_at(int epoch, const TrainConfig& cfg);

using GradMap = std::map<std::string, Array>;

/// First/second-moment accumulators, one pair per parameter.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step = 0;
  std::map<std::string, Array> m;
  std::map<std::string, Array> v;
};

/// Standard bias-corrected update. Non-finite gradients abort the batch.
void adam_step(Parameters& params, const GradMap& grads, AdamState& state, double lr);

class EarlyStopper {
 public:
  explicit EarlyStopper(int patience) : patience_(patience) {}
  /// Returns true when `value` improves on the best seen so far.
  bool observe(double value);
  bool should_stop() const { return since_best_ >= patience_; }
  double best() const { return best_; }

 private:
  int patience_;
  int since_best_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

struct EpochRecord {
  int epoch;
  double lr;
  double train_nll;  // mean per sample, normalized units
  double val_nll;
  int n_past;
};

struct TrainResult {
  Parameters best_params;
  std::vector<EpochRecord> history;
  double best_val_nll = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  bool aborted = false;
  std::string abort_reason;
};

/// Full optimization loop: the past-count schedule rotates per epoch, 20% of
/// the sampled graphs validate, best-validation parameters are returned.
/// A non-finite loss or gradient aborts with the last good checkpoint.
TrainResult train(ModelKind kind, const ExperimentSet& train_set, const ModelConfig& mcfg,
                  const SamplerConfig& scfg, const TrainConfig& tcfg);

struct AnchorRow {
  std::string experiment;
  double timestamp;  // raw time units
  double alpha;
  double beta;       // rate per raw time unit
  double mean;
  double q05, q50, q95;
  double true_rul;
  double nll;
  int nodes;  // observations used for this prediction
};

struct EvalReport {
  std::vector<AnchorRow> rows;
  std::map<std::string, double> per_experiment_nll;
  std::map<std::string, int> per_experiment_count;
  double aggregate_nll = 0.0;  // anchor-weighted mean
};

/// Per-anchor predictions over every positive-RUL observation, plus
/// per-experiment and aggregate mean NLL. All reported quantities are
/// de-normalized to raw time units.
EvalReport evaluate(ModelKind kind, const Parameters& params, const ExperimentSet& experiments,
                    const ModelConfig& mcfg, const SamplerConfig& scfg, int n_past, uint64_t seed,
                    int threads = 1);

void write_history_csv(const std::string& path, const std::vector<EpochRecord>& history);
void write_report_csv(const std::string& path, const EvalReport& report);
void write_report_summary_csv(const std::string& path, const EvalReport& report);

/// Reads back the per-anchor table written by write_report_csv.
std::vector<AnchorRow> read_report_csv(const std::string& path);

}  // namespace rulgn
