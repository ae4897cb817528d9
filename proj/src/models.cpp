#include "rulgn/models.hpp"

#include "rulgn/ops.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace rulgn {

namespace {

// Conv stack layout shared by all three stages (filters, kernel, stride,
// padding). Kernel-3 layers use padding 1 so the third stack stays nonempty
// for every admissible segment length.
struct ConvSpec {
  int filters, kernel, stride, padding;
};
constexpr ConvSpec kStack[4] = {{50, 1, 1, 0}, {18, 3, 2, 1}, {18, 3, 2, 1}, {50, 3, 2, 1}};
constexpr int kStackCount = 3;
constexpr double kHeadFloor = 1e-6;

}  // namespace

void ModelConfig::validate() const {
  if (latent_width < 1 || hidden_width < 1 || core_steps < 1) {
    throw std::invalid_argument("model config: widths and core_steps must be >= 1");
  }
  if (input_channels < 1) throw std::invalid_argument("model config: input_channels must be >= 1");
  if (segment_length < 16) {
    throw std::invalid_argument("model config: segment_length must be >= 16");
  }
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    throw std::invalid_argument("model config: dropout_rate must be in [0,1)");
  }
  if (!(time_scale > 0.0)) throw std::invalid_argument("model config: time_scale must be > 0");
}

std::string to_string(ModelKind kind) {
  return kind == ModelKind::GnnTcnn ? "gnn-tcnn" : "lstm-tcnn";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "gnn-tcnn") return ModelKind::GnnTcnn;
  if (s == "lstm-tcnn") return ModelKind::LstmTcnn;
  throw std::invalid_argument("unknown model kind: " + s + " (expected gnn-tcnn or lstm-tcnn)");
}

void Parameters::add(const std::string& name, Tensor t) {
  if (!tensors_.emplace(name, std::move(t)).second) {
    throw std::invalid_argument("parameters: duplicate name " + name);
  }
}

void Parameters::set(const std::string& name, Tensor t) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::invalid_argument("parameters: unknown name " + name);
  it->second = std::move(t);
}

const Tensor& Parameters::at(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::invalid_argument("parameters: unknown name " + name);
  return it->second;
}

Parameters Parameters::tracked_on(Tape& tape) const {
  Parameters out;
  for (const auto& [name, t] : tensors_) out.add(name, tape.leaf(t));
  return out;
}

namespace {

Tensor uniform_init(std::vector<int> shape, int fan_in, std::mt19937_64& rng) {
  const double bound = std::sqrt(1.0 / fan_in);
  std::uniform_real_distribution<double> u(-bound, bound);
  int n = 1;
  for (int d : shape) n *= d;
  Array a(n);
  for (int i = 0; i < n; ++i) a[i] = u(rng);
  return Tensor(std::move(shape), std::move(a));
}

void add_dense(Parameters& p, const std::string& prefix, int in, int out, std::mt19937_64& rng) {
  p.add(prefix + ".w", uniform_init({in, out}, in, rng));
  p.add(prefix + ".b", uniform_init({out}, in, rng));
}

void add_conv(Parameters& p, const std::string& prefix, int c_in, int c_out, int k,
              std::mt19937_64& rng) {
  p.add(prefix + ".w", uniform_init({c_out, c_in, k}, c_in * k, rng));
  p.add(prefix + ".b", uniform_init({c_out}, c_in * k, rng));
}

void add_encoder(Parameters& p, const ModelConfig& cfg, std::mt19937_64& rng) {
  int channels = cfg.input_channels;
  for (int s = 0; s < kStackCount; ++s) {
    for (int l = 0; l < 4; ++l) {
      const std::string prefix =
          "enc.stack" + std::to_string(s) + ".conv" + std::to_string(l);
      add_conv(p, prefix, channels, kStack[l].filters, kStack[l].kernel, rng);
      channels = kStack[l].filters;
    }
  }
  add_dense(p, "enc.dense", kStack[3].filters, cfg.latent_width, rng);
}

void add_heads(Parameters& p, const ModelConfig& cfg, int in_width, std::mt19937_64& rng) {
  for (const char* head : {"head.alpha", "head.beta"}) {
    add_dense(p, std::string(head) + ".fc0", in_width, cfg.hidden_width, rng);
    add_dense(p, std::string(head) + ".fc1", cfg.hidden_width, 1, rng);
  }
}

void add_gated(Parameters& p, const std::string& prefix, int in, int hidden, int out,
               std::mt19937_64& rng) {
  add_dense(p, prefix + ".gate", in, hidden, rng);
  add_dense(p, prefix + ".cand", in, hidden, rng);
  add_dense(p, prefix + ".out", hidden, out, rng);
}

}  // namespace

Parameters init_gnn_tcnn(const ModelConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  Parameters p;
  add_encoder(p, cfg, rng);
  const int d = cfg.latent_width, w = cfg.hidden_width;
  add_dense(p, "edge.fc0", 1, w, rng);
  add_dense(p, "edge.fc1", w, d, rng);
  add_gated(p, "core.edge", 3 * d, w, d, rng);
  add_gated(p, "core.node", 2 * d, w, d, rng);
  add_dense(p, "dec.node", d, d, rng);
  add_heads(p, cfg, d, rng);
  return p;
}

Parameters init_lstm_tcnn(const ModelConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  Parameters p;
  add_encoder(p, cfg, rng);
  const int d = cfg.latent_width, h = cfg.hidden_width;
  const int in = d + 1 + h;  // tCNN features, dt, previous hidden state
  for (const char* gate : {"lstm.f", "lstm.i", "lstm.o", "lstm.g"}) {
    add_dense(p, gate, in, h, rng);
  }
  add_heads(p, cfg, h, rng);
  return p;
}

Parameters init_params(ModelKind kind, const ModelConfig& cfg, std::mt19937_64& rng) {
  return kind == ModelKind::GnnTcnn ? init_gnn_tcnn(cfg, rng) : init_lstm_tcnn(cfg, rng);
}

namespace {

Tensor dense(const Tensor& x, const Parameters& p, const std::string& prefix) {
  return add_bias_rows(matmul(x, p.at(prefix + ".w")), p.at(prefix + ".b"));
}

Tensor conv_layer(const Tensor& x, const Parameters& p, const std::string& prefix,
                  const ConvSpec& spec) {
  return add_bias_channels(conv1d(x, p.at(prefix + ".w"), spec.stride, spec.padding),
                           p.at(prefix + ".b"));
}

}  // namespace

Tensor tcnn_encode(const Tensor& segment, const Parameters& p, const ModelConfig& cfg,
                   bool training, std::mt19937_64* rng) {
  if (segment.ndim() != 2 || segment.rows() != cfg.input_channels) {
    throw std::invalid_argument("tcnn_encode: segment must be [input_channels x L]");
  }
  if (segment.cols() < 16) throw std::invalid_argument("tcnn_encode: segment shorter than 16");
  if (training && !rng) throw std::invalid_argument("tcnn_encode: training requires an rng");

  std::mt19937_64 unused;
  std::mt19937_64& r = rng ? *rng : unused;

  Tensor x = segment;
  for (int s = 0; s < kStackCount; ++s) {
    const std::string stack = "enc.stack" + std::to_string(s);
    x = conv_layer(x, p, stack + ".conv0", kStack[0]);
    x = conv_layer(x, p, stack + ".conv1", kStack[1]);
    x = conv_layer(x, p, stack + ".conv2", kStack[2]);
    x = relu(dropout(x, cfg.dropout_rate, training, r));
    x = conv_layer(x, p, stack + ".conv3", kStack[3]);
    if (s + 1 < kStackCount) {
      // short tails pool over whatever remains
      x = avg_pool1d(x, std::min(2, x.cols()), 2);
    } else {
      x = global_avg_pool(x);
    }
  }
  Tensor flat = reshape(x, {1, x.dim(0)});
  return reshape(leaky_relu(dense(flat, p, "enc.dense")), {cfg.latent_width});
}

Tensor edge_encode(const Tensor& dt_column, const Parameters& p, const ModelConfig& cfg) {
  if (dt_column.ndim() != 2 || dt_column.cols() != 1) {
    throw std::invalid_argument("edge_encode: expected [E x 1] dt column");
  }
  if (dt_column.size() > 0 && dt_column.values().minCoeff() < 0.0) {
    throw std::invalid_argument("edge_encode: negative dt violates causality");
  }
  Tensor x = scale(dt_column, 1.0 / cfg.time_scale);
  return dense(leaky_relu(dense(x, p, "edge.fc0")), p, "edge.fc1");
}

namespace {

Tensor gated_mlp(const Tensor& x, const Parameters& p, const std::string& prefix) {
  Tensor gate = sigmoid(dense(x, p, prefix + ".gate"));
  Tensor cand = tanh(dense(x, p, prefix + ".cand"));
  return dense(mul(gate, cand), p, prefix + ".out");
}

}  // namespace

Tensor core_edge_update(const Tensor& e, const Tensor& v_send, const Tensor& v_recv,
                        const Parameters& p) {
  if (e.cols() != v_send.cols() || e.cols() != v_recv.cols()) {
    throw std::invalid_argument("core_edge_update: attribute widths differ");
  }
  return add(e, gated_mlp(concat({e, v_send, v_recv}, 1), p, "core.edge"));
}

Tensor core_node_update(const Tensor& v, const Tensor& agg, const Parameters& p) {
  if (v.cols() != agg.cols()) {
    throw std::invalid_argument("core_node_update: attribute widths differ");
  }
  return add(v, gated_mlp(concat({v, agg}, 1), p, "core.node"));
}

GammaOut decode_gamma(const Tensor& rows, const Parameters& p) {
  const int b = rows.rows();
  GammaOut out;
  Tensor ha = leaky_relu(dense(rows, p, "head.alpha.fc0"));
  out.alpha = add_scalar(softplus(reshape(dense(ha, p, "head.alpha.fc1"), {b})), kHeadFloor);
  Tensor hb = leaky_relu(dense(rows, p, "head.beta.fc0"));
  out.beta = add_scalar(softplus(reshape(dense(hb, p, "head.beta.fc1"), {b})), kHeadFloor);
  return out;
}

namespace {

Tensor encode_node_rows(const Tensor& rows, const Parameters& p, const ModelConfig& cfg,
                        bool training, std::mt19937_64* rng) {
  const int n = rows.rows();
  std::vector<Tensor> encoded;
  encoded.reserve(n);
  for (int i = 0; i < n; ++i) {
    Tensor seg = reshape(slice(rows, 0, i, 1), {cfg.input_channels, cfg.segment_length});
    encoded.push_back(reshape(tcnn_encode(seg, p, cfg, training, rng), {1, cfg.latent_width}));
  }
  return concat(encoded, 0);
}

}  // namespace

GammaOut gnn_tcnn_apply(const AttributedGraph& g, const std::vector<int>& readouts,
                        const Parameters& p, const ModelConfig& cfg, bool training,
                        std::mt19937_64* rng) {
  cfg.validate();
  g.validate();
  if (g.node_attrs.cols() != cfg.input_channels * cfg.segment_length) {
    throw std::invalid_argument("gnn_tcnn_apply: node width does not match config segments");
  }

  GraphIndependent enc{
      [&](const Tensor& v) { return encode_node_rows(v, p, cfg, training, rng); },
      [&](const Tensor& e) { return edge_encode(e, p, cfg); }};
  GNBlock core;
  core.edge_fn = [&](const Tensor& e, const Tensor& vr, const Tensor& vs) {
    return core_edge_update(e, vs, vr, p);
  };
  core.node_fn = [&](const Tensor& agg, const Tensor& v) { return core_node_update(v, agg, p); };
  core.aggregation = Aggregation::Mean;
  GraphIndependent dec{[&](const Tensor& v) { return leaky_relu(dense(v, p, "dec.node")); },
                       [](const Tensor& e) { return e; }};

  AttributedGraph processed = encode_process_decode(g, enc, core, dec, cfg.core_steps);
  return decode_gamma(gather_rows(processed.node_attrs, readouts), p);
}

GammaOut gnn_tcnn_forward(const CausalSample& sample, const Parameters& p, const ModelConfig& cfg,
                          bool training, std::mt19937_64* rng) {
  return gnn_tcnn_apply(sample.graph, {sample.readout}, p, cfg, training, rng);
}

GammaOut gnn_tcnn_forward_batch(const std::vector<CausalSample>& samples, const Parameters& p,
                                const ModelConfig& cfg, bool training, std::mt19937_64* rng) {
  std::vector<AttributedGraph> graphs;
  graphs.reserve(samples.size());
  for (const CausalSample& s : samples) graphs.push_back(s.graph);
  GraphBatch batch = batch_graphs(graphs);
  std::vector<int> readouts;
  for (size_t i = 0; i < samples.size(); ++i) {
    readouts.push_back(batch.node_offsets[i] + samples[i].readout);
  }
  return gnn_tcnn_apply(batch.graph, readouts, p, cfg, training, rng);
}

std::vector<ObservationStep> observation_steps(const CausalSample& sample,
                                               const ModelConfig& cfg) {
  std::vector<ObservationStep> steps;
  const int n = sample.graph.num_nodes();
  for (int i = 0; i < n; ++i) {
    ObservationStep step;
    step.segment = reshape(slice(sample.graph.node_attrs, 0, i, 1),
                           {cfg.input_channels, cfg.segment_length});
    step.dt = i == 0 ? 0.0 : sample.times[i] - sample.times[i - 1];
    steps.push_back(std::move(step));
  }
  return steps;
}

GammaOut lstm_tcnn_forward(const std::vector<ObservationStep>& steps, const Parameters& p,
                           const ModelConfig& cfg, bool training, std::mt19937_64* rng) {
  cfg.validate();
  if (steps.empty()) throw std::invalid_argument("lstm_tcnn_forward: no observations");
  if (steps.front().dt != 0.0) {
    throw std::invalid_argument("lstm_tcnn_forward: first dt must be 0");
  }
  for (size_t i = 1; i < steps.size(); ++i) {
    if (!(steps[i].dt > 0.0)) {
      throw std::invalid_argument("lstm_tcnn_forward: observations out of time order");
    }
  }

  const int h = cfg.hidden_width;
  Tensor hidden = Tensor::zeros({1, h});
  Tensor cell = Tensor::zeros({1, h});
  for (const ObservationStep& step : steps) {
    Tensor feat = reshape(tcnn_encode(step.segment, p, cfg, training, rng),
                          {1, cfg.latent_width});
    Tensor x = concat({feat, Tensor::constant({1, 1}, step.dt / cfg.time_scale)}, 1);
    Tensor z = concat({x, hidden}, 1);
    Tensor f = sigmoid(dense(z, p, "lstm.f"));
    Tensor i = sigmoid(dense(z, p, "lstm.i"));
    Tensor o = sigmoid(dense(z, p, "lstm.o"));
    Tensor g = tanh(dense(z, p, "lstm.g"));
    cell = add(mul(f, cell), mul(i, g));
    hidden = mul(o, tanh(cell));
  }
  return decode_gamma(hidden, p);
}

GammaOut model_forward(ModelKind kind, const CausalSample& sample, const Parameters& p,
                       const ModelConfig& cfg, bool training, std::mt19937_64* rng) {
  if (kind == ModelKind::GnnTcnn) return gnn_tcnn_forward(sample, p, cfg, training, rng);
  return lstm_tcnn_forward(observation_steps(sample, cfg), p, cfg, training, rng);
}

namespace {

constexpr const char* kParamsFile = "model.bin";
constexpr const char* kManifestFile = "model.manifest.txt";
constexpr const char* kConfigFile = "model.config.txt";

}  // namespace

void save_model(const std::string& dir, ModelKind kind, const ModelConfig& cfg,
                const Parameters& params) {
  std::filesystem::create_directories(dir);
  save_tensors(dir + "/" + kParamsFile, params.map());
  write_tensor_manifest(dir + "/" + kManifestFile, params.map());
  std::ofstream os(dir + "/" + kConfigFile);
  if (!os) throw std::runtime_error("save_model: cannot write config manifest in " + dir);
  os << "kind = " << to_string(kind) << "\n";
  os << "latent_width = " << cfg.latent_width << "\n";
  os << "hidden_width = " << cfg.hidden_width << "\n";
  os << "core_steps = " << cfg.core_steps << "\n";
  os << "input_channels = " << cfg.input_channels << "\n";
  os << "segment_length = " << cfg.segment_length << "\n";
  os << "dropout_rate = " << cfg.dropout_rate << "\n";
  os << "time_scale = " << cfg.time_scale << "\n";
}

LoadedModel load_model(const std::string& dir) {
  std::ifstream is(dir + "/" + kConfigFile);
  if (!is) throw std::runtime_error("load_model: missing config manifest in " + dir);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  LoadedModel m;
  m.kind = model_kind_from_string(kv.at("kind"));
  m.config.latent_width = std::stoi(kv.at("latent_width"));
  m.config.hidden_width = std::stoi(kv.at("hidden_width"));
  m.config.core_steps = std::stoi(kv.at("core_steps"));
  m.config.input_channels = std::stoi(kv.at("input_channels"));
  m.config.segment_length = std::stoi(kv.at("segment_length"));
  m.config.dropout_rate = std::stod(kv.at("dropout_rate"));
  m.config.time_scale = std::stod(kv.at("time_scale"));
  m.config.validate();
  for (auto& [name, tensor] : load_tensors(dir + "/" + kParamsFile)) {
    m.params.add(name, tensor);
  }
  return m;
}

}  // namespace rulgn
