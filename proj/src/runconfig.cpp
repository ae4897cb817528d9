#include "rulgn/runconfig.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rulgn {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

int to_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const int out = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return out;
  } catch (...) {
    throw std::invalid_argument("config: " + key + " expects an integer, got '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return out;
  } catch (...) {
    throw std::invalid_argument("config: " + key + " expects a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: " + key + " expects true/false, got '" + v + "'");
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::istringstream is(v);
  std::string item;
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_int(key, item));
  }
  if (out.empty()) throw std::invalid_argument("config: " + key + " expects a comma list");
  return out;
}

}  // namespace

void RunConfig::apply(const std::string& key, const std::string& value) {
  // sim
  if (key == "sim.n_steps") sim.n_steps = to_int(key, value);
  else if (key == "sim.increment_rate") sim.increment_rate = to_double(key, value);
  else if (key == "sim.failure_threshold") sim.failure_threshold = to_double(key, value);
  else if (key == "sim.c_mean") sim.c_mean = to_double(key, value);
  else if (key == "sim.c_std") sim.c_std = to_double(key, value);
  else if (key == "sim.latent_noise_std") sim.latent_noise_std = to_double(key, value);
  else if (key == "sim.obs_noise_std") sim.obs_noise_std = to_double(key, value);
  else if (key == "sim.segment_length") sim.segment_length = to_int(key, value);
  else if (key == "sim.spike_count") sim.spike_count = to_int(key, value);
  else if (key == "sim.spike_a0") sim.spike_a0 = to_double(key, value);
  else if (key == "sim.spike_a1") sim.spike_a1 = to_double(key, value);
  else if (key == "sim.seed") sim.seed = static_cast<uint64_t>(to_int(key, value));
  else if (key == "sim.train_experiments") sim_train_experiments = to_int(key, value);
  else if (key == "sim.test_experiments") sim_test_experiments = to_int(key, value);
  // sampler
  else if (key == "sampler.window") sampler.window = to_double(key, value);
  else if (key == "sampler.min_spacing") sampler.min_spacing = to_double(key, value);
  else if (key == "sampler.schedule") sampler.schedule = to_int_list(key, value);
  else if (key == "sampler.eval_past_count") sampler.eval_past_count = to_int(key, value);
  else if (key == "sampler.include_self_edges") sampler.include_self_edges = to_bool(key, value);
  // model
  else if (key == "model.latent_width") model.latent_width = to_int(key, value);
  else if (key == "model.hidden_width") model.hidden_width = to_int(key, value);
  else if (key == "model.core_steps") model.core_steps = to_int(key, value);
  else if (key == "model.dropout_rate") model.dropout_rate = to_double(key, value);
  else if (key == "model.time_scale") model.time_scale = to_double(key, value);
  // train
  else if (key == "train.base_lr") train.base_lr = to_double(key, value);
  else if (key == "train.burn_in_epochs") train.burn_in_epochs = to_int(key, value);
  else if (key == "train.decay") train.decay = to_double(key, value);
  else if (key == "train.decay_start_epoch") train.decay_start_epoch = to_int(key, value);
  else if (key == "train.max_epochs") train.max_epochs = to_int(key, value);
  else if (key == "train.patience") train.patience = to_int(key, value);
  else if (key == "train.val_fraction") train.val_fraction = to_double(key, value);
  else if (key == "train.batch_size") train.batch_size = to_int(key, value);
  else if (key == "train.samples_per_experiment") train.samples_per_experiment = to_int(key, value);
  else if (key == "train.clip_norm") train.clip_norm = to_double(key, value);
  else if (key == "train.seed") train.seed = static_cast<uint64_t>(to_int(key, value));
  // femto ingestion
  else if (key == "femto.segment_spacing") femto.segment_spacing = to_double(key, value);
  else if (key == "femto.samples_per_segment") femto.samples_per_segment = to_int(key, value);
  else if (key == "femto.strict_counts") femto.strict_counts = to_bool(key, value);
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("config: cannot open " + path);
  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                  " is not 'section.key = value'");
    }
    cfg.apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

}  // namespace rulgn
