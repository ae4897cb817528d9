#include "rulgn/simdata.hpp"

#include "rulgn/prob.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace rulgn {

void SimProcessConfig::validate() const {
  if (n_steps < 2) throw std::invalid_argument("sim config: n_steps must be >= 2");
  if (!(increment_rate > 0)) throw std::invalid_argument("sim config: increment rate must be > 0");
  if (c_std < 0 || obs_noise_std < 0) throw std::invalid_argument("sim config: negative std");
  if (segment_length < 1) throw std::invalid_argument("sim config: segment_length must be >= 1");
  if (spike_count < 0 || spike_count > segment_length) {
    throw std::invalid_argument("sim config: spike_count must be in [0, segment_length]");
  }
  if (failure_threshold == 0.0) {
    throw std::invalid_argument("sim config: failure threshold must be positive (or < 0 for auto)");
  }
}

double increment_shape(double t, double c) { return 0.02 + std::pow(t, c); }

double sample_increment(double t, double c, double rate, std::mt19937_64& rng) {
  return gamma_sample(GammaParams{increment_shape(t, c), rate}, rng);
}

namespace {

double step_time(int i, int n_steps) { return static_cast<double>(i) / (n_steps - 1); }

double draw_exponent(const SimProcessConfig& cfg, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(cfg.c_mean, cfg.c_std);
  double c = gauss(rng);
  while (c <= 0.05) c = gauss(rng);  // keep t^c well defined near t = 0
  return c;
}

}  // namespace

LatentPath simulate_latent(const SimProcessConfig& cfg, double c, std::mt19937_64& rng) {
  cfg.validate();
  if (!std::isfinite(c)) throw std::invalid_argument("simulate_latent: c must be finite");
  if (cfg.failure_threshold <= 0) {
    throw std::invalid_argument("simulate_latent: needs a resolved failure threshold");
  }
  LatentPath path;
  double z = 0.0;
  for (int i = 0; i < cfg.n_steps; ++i) {
    z += sample_increment(step_time(i, cfg.n_steps), c, cfg.increment_rate, rng);
    path.z.push_back(z);
    if (z >= cfg.failure_threshold) {
      path.failure_step = i;
      break;
    }
  }
  return path;
}

double calibrate_failure_threshold(const SimProcessConfig& cfg, int pilot_runs) {
  cfg.validate();
  if (pilot_runs < 1) throw std::invalid_argument("calibrate: pilot_runs must be >= 1");
  const int target_step = static_cast<int>(0.55 * (cfg.n_steps - 1));
  std::vector<double> z_at_target(pilot_runs);
  for (int r = 0; r < pilot_runs; ++r) {
    std::mt19937_64 rng(derive_seed(cfg.seed, {0x0ca11b8u, static_cast<uint64_t>(r)}));
    const double c = draw_exponent(cfg, rng);
    double z = 0.0;
    for (int i = 0; i <= target_step; ++i) {
      z += sample_increment(step_time(i, cfg.n_steps), c, cfg.increment_rate, rng);
    }
    z_at_target[r] = z;
  }
  std::nth_element(z_at_target.begin(), z_at_target.begin() + pilot_runs / 2, z_at_target.end());
  return z_at_target[pilot_runs / 2];
}

Tensor emit_segment(double z_tilde, const SimProcessConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  const int n = cfg.segment_length;
  Array samples(n);
  if (cfg.obs_noise_std > 0) {
    std::normal_distribution<double> noise(0.0, cfg.obs_noise_std);
    for (int i = 0; i < n; ++i) samples[i] = noise(rng);
  } else {
    samples.setZero();
  }
  if (cfg.spike_count > 0) {
    // partial Fisher-Yates draw of spike positions, without replacement
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    std::uniform_real_distribution<double> sign(0.0, 1.0);
    const double amplitude = cfg.spike_a0 + cfg.spike_a1 * z_tilde * z_tilde;
    for (int k = 0; k < cfg.spike_count; ++k) {
      std::uniform_int_distribution<int> pick(k, n - 1);
      std::swap(pool[k], pool[pick(rng)]);
      samples[pool[k]] += (sign(rng) < 0.5 ? -1.0 : 1.0) * amplitude;
    }
  }
  return Tensor({1, n}, std::move(samples));
}

namespace {

SimProcessConfig resolved_config(const SimProcessConfig& cfg, double* out_zf, double* out_sz) {
  SimProcessConfig r = cfg;
  if (r.failure_threshold < 0) r.failure_threshold = calibrate_failure_threshold(cfg);
  if (r.latent_noise_std < 0) r.latent_noise_std = 0.02 * r.failure_threshold;
  if (out_zf) *out_zf = r.failure_threshold;
  if (out_sz) *out_sz = r.latent_noise_std;
  return r;
}

Experiment generate_experiment(const SimProcessConfig& cfg, const std::string& id,
                               uint64_t stream) {
  constexpr int kMaxAttempts = 100;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::mt19937_64 rng(derive_seed(cfg.seed, {stream, static_cast<uint64_t>(attempt)}));
    const double c = draw_exponent(cfg, rng);
    LatentPath path = simulate_latent(cfg, c, rng);
    if (path.failure_step < 1) {
      std::cerr << "simdata: experiment " << id << " attempt " << attempt
                << (path.failure_step < 0 ? " did not reach the failure threshold"
                                          : " failed at the first step")
                << "; regenerating\n";
      continue;
    }
    Experiment exp;
    exp.id = id;
    exp.condition = "sim";
    exp.failure_time = step_time(path.failure_step, cfg.n_steps);
    std::normal_distribution<double> latent_noise(0.0, cfg.latent_noise_std);
    for (int k = 0; k < path.failure_step; ++k) {
      const double z_tilde =
          path.z[k] + (cfg.latent_noise_std > 0 ? latent_noise(rng) : 0.0);
      exp.timestamps.push_back(step_time(k, cfg.n_steps));
      exp.segments.push_back(emit_segment(z_tilde, cfg, rng));
      exp.latent.push_back(path.z[k]);
    }
    exp.validate();
    return exp;
  }
  throw std::runtime_error("simdata: experiment " + id + " kept missing the failure threshold");
}

}  // namespace

SimDataset generate_dataset(const SimProcessConfig& cfg, int n_train, int n_test) {
  cfg.validate();
  if (n_train < 1 || n_test < 0) throw std::invalid_argument("generate_dataset: bad split sizes");
  SimDataset ds;
  SimProcessConfig r = resolved_config(cfg, &ds.resolved_failure_threshold,
                                       &ds.resolved_latent_noise_std);
  char buf[32];
  for (int i = 0; i < n_train; ++i) {
    std::snprintf(buf, sizeof(buf), "train_%02d", i);
    ds.train.push_back(generate_experiment(r, buf, 1000 + i));
  }
  for (int i = 0; i < n_test; ++i) {
    std::snprintf(buf, sizeof(buf), "test_%02d", i);
    ds.test.push_back(generate_experiment(r, buf, 2000 + i));
  }
  return ds;
}

namespace {

void write_segment_blob(const fs::path& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("simdata: cannot write " + path.string());
  const uint32_t ndim = static_cast<uint32_t>(t.ndim());
  os.write(reinterpret_cast<const char*>(&ndim), sizeof(ndim));
  for (int d : t.shape()) {
    const uint32_t ext = static_cast<uint32_t>(d);
    os.write(reinterpret_cast<const char*>(&ext), sizeof(ext));
  }
  os.write(reinterpret_cast<const char*>(t.values().data()),
           static_cast<std::streamsize>(t.size() * sizeof(double)));
}

Tensor read_segment_blob(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("simdata: cannot read " + path.string());
  uint32_t ndim = 0;
  is.read(reinterpret_cast<char*>(&ndim), sizeof(ndim));
  std::vector<int> shape(ndim);
  int total = 1;
  for (uint32_t i = 0; i < ndim; ++i) {
    uint32_t ext = 0;
    is.read(reinterpret_cast<char*>(&ext), sizeof(ext));
    shape[i] = static_cast<int>(ext);
    total *= shape[i];
  }
  Array values(total);
  is.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(total * sizeof(double)));
  if (!is) throw std::runtime_error("simdata: truncated segment blob " + path.string());
  return Tensor(std::move(shape), std::move(values));
}

void write_meta(const fs::path& path, const Experiment& exp) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("simdata: cannot write " + path.string());
  os.precision(17);
  os << "id " << exp.id << "\n";
  os << "condition " << exp.condition << "\n";
  os << "failure_time " << exp.failure_time << "\n";
  os << "timestamps";
  for (double t : exp.timestamps) os << " " << t;
  os << "\n";
  if (!exp.latent.empty()) {
    os << "latent";
    for (double z : exp.latent) os << " " << z;
    os << "\n";
  }
}

void save_experiment(const fs::path& dir, const Experiment& exp) {
  fs::create_directories(dir);
  write_meta(dir / "meta", exp);
  char buf[32];
  for (size_t k = 0; k < exp.segments.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "seg_%05zu.bin", k);
    write_segment_blob(dir / buf, exp.segments[k]);
  }
}

Experiment load_experiment(const fs::path& dir) {
  std::ifstream is(dir / "meta");
  if (!is) throw std::runtime_error("simdata: missing meta in " + dir.string());
  Experiment exp;
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "id") {
      ls >> exp.id;
    } else if (key == "condition") {
      ls >> exp.condition;
    } else if (key == "failure_time") {
      ls >> exp.failure_time;
    } else if (key == "timestamps") {
      double t;
      while (ls >> t) exp.timestamps.push_back(t);
    } else if (key == "latent") {
      double z;
      while (ls >> z) exp.latent.push_back(z);
    }
  }
  char buf[32];
  for (size_t k = 0; k < exp.timestamps.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "seg_%05zu.bin", k);
    exp.segments.push_back(read_segment_blob(dir / buf));
  }
  exp.validate();
  return exp;
}

ExperimentSet load_split(const fs::path& root) {
  ExperimentSet out;
  if (!fs::exists(root)) return out;
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const fs::path& d : dirs) out.push_back(load_experiment(d));
  return out;
}

}  // namespace

void save_experiments(const std::string& root, const ExperimentSet& train,
                      const ExperimentSet& test) {
  for (const Experiment& exp : train) save_experiment(fs::path(root) / "train" / exp.id, exp);
  for (const Experiment& exp : test) save_experiment(fs::path(root) / "test" / exp.id, exp);
}

DiskDataset load_dataset(const std::string& root) {
  if (!fs::exists(root)) throw std::runtime_error("dataset not found: " + root);
  DiskDataset ds;
  ds.train = load_split(fs::path(root) / "train");
  ds.test = load_split(fs::path(root) / "test");
  if (ds.train.empty() && ds.test.empty()) {
    throw std::runtime_error("dataset at " + root + " contains no experiments");
  }
  return ds;
}

}  // namespace rulgn
