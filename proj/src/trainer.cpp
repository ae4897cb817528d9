#include "rulgn/trainer.hpp"

#include "rulgn/ops.hpp"
#include "rulgn/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace rulgn {

void TrainConfig::validate() const {
  if (!(base_lr > 0)) throw std::invalid_argument("train config: base_lr must be > 0");
  if (burn_in_epochs < 0 || decay_start_epoch < burn_in_epochs) {
    throw std::invalid_argument("train config: need decay_start_epoch >= burn_in_epochs >= 0");
  }
  if (!(decay > 0 && decay <= 1)) throw std::invalid_argument("train config: decay must be in (0,1]");
  if (max_epochs < 1) throw std::invalid_argument("train config: max_epochs must be >= 1");
  if (patience < 1) throw std::invalid_argument("train config: patience must be >= 1");
  if (!(val_fraction > 0 && val_fraction < 1)) {
    throw std::invalid_argument("train config: val_fraction must be in (0,1)");
  }
  if (batch_size < 1 || samples_per_experiment < 1 || threads < 1) {
    throw std::invalid_argument("train config: batch_size, samples and threads must be >= 1");
  }
}

double lr_at(int epoch, const TrainConfig& cfg) {
  cfg.validate();
  if (epoch < 0) throw std::invalid_argument("lr_at: epoch must be >= 0");
  if (epoch < cfg.burn_in_epochs) {
    return cfg.base_lr * (epoch + 1) / cfg.burn_in_epochs;
  }
  if (epoch <= cfg.decay_start_epoch) return cfg.base_lr;
  return cfg.base_lr * std::pow(cfg.decay, epoch - cfg.decay_start_epoch);
}

void adam_step(Parameters& params, const GradMap& grads, AdamState& state, double lr) {
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (const auto& [name, g] : grads) {
    if (!g.allFinite()) {
      throw NumericError("adam_step: non-finite gradient for " + name);
    }
    const Tensor& p = params.at(name);
    if (p.size() != g.size()) throw std::invalid_argument("adam_step: shape mismatch for " + name);
    Array& m = state.m.try_emplace(name, Array::Zero(g.size())).first->second;
    Array& v = state.v.try_emplace(name, Array::Zero(g.size())).first->second;
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g * g;
    Array update = lr * (m / bc1) / ((v / bc2).sqrt() + state.epsilon);
    params.set(name, Tensor(p.shape(), p.values() - update));
  }
}

bool EarlyStopper::observe(double value) {
  if (value < best_) {
    best_ = value;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

namespace {

struct SampleGrad {
  double loss = 0.0;
  GradMap grads;
};

SampleGrad forward_backward(ModelKind kind, const CausalSample& sample, const Parameters& params,
                            const ModelConfig& mcfg, std::mt19937_64& rng) {
  Tape tape;
  Parameters tracked = params.tracked_on(tape);
  GammaOut out = model_forward(kind, sample, tracked, mcfg, true, &rng);
  Tensor loss = nll_loss(out.alpha, out.beta, {sample.target / mcfg.time_scale});
  tape.backward(loss);
  SampleGrad result;
  result.loss = loss.value();
  for (const auto& [name, t] : tracked.map()) result.grads[name] = tape.grad(t).values();
  return result;
}

void clip_gradients(GradMap& grads, double clip_norm) {
  if (clip_norm <= 0) return;
  double sq = 0;
  for (const auto& [name, g] : grads) sq += (g * g).sum();
  const double norm = std::sqrt(sq);
  if (norm <= clip_norm) return;
  const double s = clip_norm / norm;
  for (auto& [name, g] : grads) g *= s;
}

double validation_nll(ModelKind kind, const std::vector<CausalSample>& val,
                      const Parameters& params, const ModelConfig& mcfg, int threads) {
  if (val.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> losses(val.size());
  parallel_for(static_cast<int>(val.size()), threads, [&](int i) {
    GammaOut out = model_forward(kind, val[i], params, mcfg, false, nullptr);
    losses[i] = -gamma_log_pdf(out.params(), val[i].target / mcfg.time_scale);
  });
  double s = 0;
  for (double l : losses) s += l;
  return s / static_cast<double>(val.size());
}

}  // namespace

TrainResult train(ModelKind kind, const ExperimentSet& train_set, const ModelConfig& mcfg,
                  const SamplerConfig& scfg, const TrainConfig& tcfg) {
  mcfg.validate();
  scfg.validate();
  tcfg.validate();
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");

  std::mt19937_64 init_rng(derive_seed(tcfg.seed, {0x1217u}));
  Parameters params = init_params(kind, mcfg, init_rng);
  AdamState adam;
  EarlyStopper stopper(tcfg.patience);

  TrainResult result;
  result.best_params = params;

  for (int epoch = 0; epoch < tcfg.max_epochs; ++epoch) {
    const int n_past = epoch_past_count(epoch, scfg);
    const double lr = lr_at(epoch, tcfg);

    // fresh causal graphs for this epoch
    std::vector<CausalSample> samples;
    for (size_t e = 0; e < train_set.size(); ++e) {
      for (int j = 0; j < tcfg.samples_per_experiment; ++j) {
        std::mt19937_64 rng(derive_seed(
            tcfg.seed, {0x5a3u, static_cast<uint64_t>(epoch), static_cast<uint64_t>(e),
                        static_cast<uint64_t>(j)}));
        samples.push_back(sample_training_graph(train_set[e], scfg, n_past, rng));
      }
    }
    std::mt19937_64 shuffle_rng(derive_seed(tcfg.seed, {0x5bfu, static_cast<uint64_t>(epoch)}));
    std::shuffle(samples.begin(), samples.end(), shuffle_rng);

    int n_val = 0;
    if (samples.size() >= 2) {
      n_val = std::max(1, static_cast<int>(std::lround(tcfg.val_fraction * samples.size())));
      n_val = std::min(n_val, static_cast<int>(samples.size()) - 1);
    }
    const int n_train = static_cast<int>(samples.size()) - n_val;

    double train_loss_sum = 0;
    try {
      for (int start = 0; start < n_train; start += tcfg.batch_size) {
        const int b = std::min(tcfg.batch_size, n_train - start);
        std::vector<SampleGrad> grads(b);
        parallel_for(b, tcfg.threads, [&](int i) {
          std::mt19937_64 rng(derive_seed(
              tcfg.seed, {0xf00du, static_cast<uint64_t>(epoch),
                          static_cast<uint64_t>(start + i)}));
          grads[i] = forward_backward(kind, samples[start + i], params, mcfg, rng);
        });

        GradMap total;
        for (int i = 0; i < b; ++i) {
          train_loss_sum += grads[i].loss;
          for (auto& [name, g] : grads[i].grads) {
            auto [it, inserted] = total.try_emplace(name, g);
            if (!inserted) it->second += g;
          }
        }
        clip_gradients(total, tcfg.clip_norm);
        adam_step(params, total, adam, lr);
      }
    } catch (const NumericError& err) {
      result.aborted = true;
      result.abort_reason = err.what();
      std::cerr << "train: aborting at epoch " << epoch << ": " << err.what() << "\n";
      break;
    }

    std::vector<CausalSample> val(samples.end() - n_val, samples.end());
    const double val_nll = validation_nll(kind, val, params, mcfg, tcfg.threads);
    const double train_nll = n_train > 0 ? train_loss_sum / n_train : 0.0;
    result.history.push_back(EpochRecord{epoch, lr, train_nll, val_nll, n_past});
    std::cerr << "epoch " << epoch << " n_past " << n_past << " lr " << lr << " train "
              << train_nll << " val " << val_nll << "\n";

    if (stopper.observe(val_nll)) {
      result.best_params = params;
      result.best_val_nll = val_nll;
      result.best_epoch = epoch;
    }
    if (stopper.should_stop()) break;
  }
  return result;
}

EvalReport evaluate(ModelKind kind, const Parameters& params, const ExperimentSet& experiments,
                    const ModelConfig& mcfg, const SamplerConfig& scfg, int n_past, uint64_t seed,
                    int threads) {
  mcfg.validate();
  scfg.validate();
  EvalReport report;
  const double tau = mcfg.time_scale;
  for (const Experiment& exp : experiments) {
    std::vector<CausalSample> samples = eval_graphs(exp, scfg, n_past, seed);
    std::vector<AnchorRow> rows(samples.size());
    parallel_for(static_cast<int>(samples.size()), threads, [&](int i) {
      const CausalSample& s = samples[i];
      GammaOut out = model_forward(kind, s, params, mcfg, false, nullptr);
      GammaParams norm = out.params();
      GammaParams denorm{norm.alpha, norm.beta / tau};
      AnchorRow row;
      row.experiment = exp.id;
      row.timestamp = s.times.back();
      row.alpha = denorm.alpha;
      row.beta = denorm.beta;
      row.mean = gamma_stats(denorm).mean;
      row.q05 = gamma_quantile(denorm, 0.05);
      row.q50 = gamma_quantile(denorm, 0.50);
      row.q95 = gamma_quantile(denorm, 0.95);
      row.true_rul = s.target;
      row.nll = -gamma_log_pdf(denorm, s.target);
      row.nodes = s.graph.num_nodes();
      rows[i] = std::move(row);
    });
    double nll_sum = 0;
    for (AnchorRow& row : rows) {
      nll_sum += row.nll;
      report.rows.push_back(std::move(row));
    }
    if (!rows.empty()) {
      report.per_experiment_nll[exp.id] = nll_sum / static_cast<double>(rows.size());
      report.per_experiment_count[exp.id] = static_cast<int>(rows.size());
    }
  }
  if (!report.rows.empty()) {
    double s = 0;
    for (const AnchorRow& row : report.rows) s += row.nll;
    report.aggregate_nll = s / static_cast<double>(report.rows.size());
  }
  return report;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

void write_history_csv(const std::string& path, const std::vector<EpochRecord>& history) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "epoch,lr,train_nll,val_nll,n_past\n";
  for (const EpochRecord& r : history) {
    os << r.epoch << "," << fmt(r.lr) << "," << fmt(r.train_nll) << "," << fmt(r.val_nll) << ","
       << r.n_past << "\n";
  }
}

void write_report_csv(const std::string& path, const EvalReport& report) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "experiment,timestamp,alpha,beta,mean,q05,q50,q95,true_rul\n";
  for (const AnchorRow& r : report.rows) {
    os << r.experiment << "," << fmt(r.timestamp) << "," << fmt(r.alpha) << "," << fmt(r.beta)
       << "," << fmt(r.mean) << "," << fmt(r.q05) << "," << fmt(r.q50) << "," << fmt(r.q95) << ","
       << fmt(r.true_rul) << "\n";
  }
}

void write_report_summary_csv(const std::string& path, const EvalReport& report) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "experiment,anchors,mean_nll\n";
  for (const auto& [id, nll] : report.per_experiment_nll) {
    os << id << "," << report.per_experiment_count.at(id) << "," << fmt(nll) << "\n";
  }
  int total = 0;
  for (const auto& [id, n] : report.per_experiment_count) total += n;
  os << "ALL," << total << "," << fmt(report.aggregate_nll) << "\n";
}

std::vector<AnchorRow> read_report_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::vector<AnchorRow> rows;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty report: " + path);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != 9) throw std::runtime_error("bad report row in " + path + ": " + line);
    AnchorRow r;
    r.experiment = fields[0];
    r.timestamp = std::stod(fields[1]);
    r.alpha = std::stod(fields[2]);
    r.beta = std::stod(fields[3]);
    r.mean = std::stod(fields[4]);
    r.q05 = std::stod(fields[5]);
    r.q50 = std::stod(fields[6]);
    r.q95 = std::stod(fields[7]);
    r.true_rul = std::stod(fields[8]);
    r.nll = 0;
    r.nodes = 0;
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace rulgn
