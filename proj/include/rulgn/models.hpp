#pragma once

#include "rulgn/checkpoint.hpp"
#include "rulgn/graph.hpp"
#include "rulgn/prob.hpp"
#include "rulgn/sampler.hpp"

#include <random>
#include <string>

namespace rulgn {

struct ModelConfig {
  int latent_width = 15;   // node/edge attribute width after encoding
  int hidden_width = 30;   // core MLP hidden width; also the LSTM state size
  int core_steps = 3;      // shared-weight core applications
  int input_channels = 1;
  int segment_length = 1000;
  double dropout_rate = 0.2;
  double time_scale = 1000.0;  // normalizes dt and RUL targets to order one

  void validate() const;
};

enum class ModelKind { GnnTcnn, LstmTcnn };
std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

/// Named collection of weight tensors. Iteration order is the name order,
/// which keeps initialization, updates and checkpoints deterministic.
class Parameters {
 public:
  void add(const std::string& name, Tensor t);
  void set(const std::string& name, Tensor t);  // name must exist
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const { return tensors_.count(name) > 0; }
  size_t size() const { return tensors_.size(); }
  const TensorMap& map() const { return tensors_; }

  /// Copy whose tensors are registered as gradient leaves of `tape`.
  Parameters tracked_on(Tape& tape) const;

 private:
  TensorMap tensors_;
};

Parameters init_gnn_tcnn(const ModelConfig& cfg, std::mt19937_64& rng);
Parameters init_lstm_tcnn(const ModelConfig& cfg, std::mt19937_64& rng);
Parameters init_params(ModelKind kind, const ModelConfig& cfg, std::mt19937_64& rng);

/// Predicted Gamma heads for a batch, each of shape [B].
struct GammaOut {
  Tensor alpha;
  Tensor beta;

  GammaParams params(int i = 0) const { return GammaParams{alpha(i), beta(i)}; }
};

/// Temporal CNN node encoder: three conv stacks with stride-2 layers and
/// average pooling, global average pooling at the end, dense to the latent
/// width. Input [C_in x L] with L >= 16, output [latent_width].
Tensor tcnn_encode(const Tensor& segment, const Parameters& p, const ModelConfig& cfg,
                   bool training, std::mt19937_64* rng);

/// Feed-forward map of dt/time_scale, one row per edge: [E x 1] -> [E x d].
Tensor edge_encode(const Tensor& dt_column, const Parameters& p, const ModelConfig& cfg);

/// Residual gated-tanh MLP on concat(e, v_send, v_recv), output added to e.
Tensor core_edge_update(const Tensor& e, const Tensor& v_send, const Tensor& v_recv,
                        const Parameters& p);

/// Residual gated-tanh MLP on concat(v, aggregated message), added to v.
Tensor core_node_update(const Tensor& v, const Tensor& agg, const Parameters& p);

/// Two MLP heads ending in softplus (+1e-6), strictly positive outputs.
GammaOut decode_gamma(const Tensor& rows, const Parameters& p);

/// Full network on an encoded-input graph; `readouts` names the node row per
/// prediction (the latest observation of each sample).
GammaOut gnn_tcnn_apply(const AttributedGraph& g, const std::vector<int>& readouts,
                        const Parameters& p, const ModelConfig& cfg, bool training,
                        std::mt19937_64* rng);

GammaOut gnn_tcnn_forward(const CausalSample& sample, const Parameters& p, const ModelConfig& cfg,
                          bool training, std::mt19937_64* rng);

/// Batched forward over several samples (disjoint-union graph).
GammaOut gnn_tcnn_forward_batch(const std::vector<CausalSample>& samples, const Parameters& p,
                                const ModelConfig& cfg, bool training, std::mt19937_64* rng);

/// One observation step of the recurrent baseline.
struct ObservationStep {
  Tensor segment;  // [C_in x L]
  double dt = 0.0;  // seconds since the previous observation; 0 for the first
};

std::vector<ObservationStep> observation_steps(const CausalSample& sample,
                                               const ModelConfig& cfg);

/// LSTM over tCNN features with dt appended to the cell input; the final
/// hidden state feeds the Gamma heads.
GammaOut lstm_tcnn_forward(const std::vector<ObservationStep>& steps, const Parameters& p,
                           const ModelConfig& cfg, bool training, std::mt19937_64* rng);

GammaOut model_forward(ModelKind kind, const CausalSample& sample, const Parameters& p,
                       const ModelConfig& cfg, bool training, std::mt19937_64* rng);

/// Model checkpoint: parameter container plus a plain-text config manifest.
void save_model(const std::string& dir, ModelKind kind, const ModelConfig& cfg,
                const Parameters& params);

struct LoadedModel {
  ModelKind kind;
  ModelConfig config;
  Parameters params;
};
LoadedModel load_model(const std::string& dir);

}  // namespace rulgn
