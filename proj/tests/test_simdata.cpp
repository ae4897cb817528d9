#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rulgn/prob.hpp"
#include "rulgn/simdata.hpp"

#include "testutil.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace rulgn;

namespace {

SimProcessConfig desk_config() {
  SimProcessConfig cfg;
  cfg.n_steps = 300;
  cfg.segment_length = 64;
  cfg.seed = 7;
  return cfg;
}

double median_failure_step(const SimProcessConfig& cfg, double c, int runs, uint64_t salt) {
  std::vector<double> steps;
  for (int r = 0; r < runs; ++r) {
    std::mt19937_64 rng(derive_seed(cfg.seed, {salt, static_cast<uint64_t>(r)}));
    LatentPath p = simulate_latent(cfg, c, rng);
    steps.push_back(p.failure_step < 0 ? cfg.n_steps : p.failure_step);
  }
  std::nth_element(steps.begin(), steps.begin() + runs / 2, steps.end());
  return steps[runs / 2];
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<int> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int x, int y) { return v[x] < v[y]; });
    std::vector<double> r(v.size());
    for (size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i);
    return r;
  };
  std::vector<double> ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double num = 0, va = 0, vb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  return num / std::sqrt(va * vb);
}

}  // namespace

TEST_CASE("increment statistics match the Gamma law") {
  SimProcessConfig cfg = desk_config();
  const double c = 1.1;
  std::mt19937_64 rng(1);

  // mean within 3 standard errors at three process ages
  const int n = 100000;
  for (double t : {0.1, 0.5, 0.9}) {
    const double alpha = increment_shape(t, c);
    double s = 0;
    for (int i = 0; i < n; ++i) s += sample_increment(t, c, cfg.increment_rate, rng);
    const double mean = s / n;
    const double expected = alpha / cfg.increment_rate;
    const double se = std::sqrt(alpha) / cfg.increment_rate / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(mean - expected) < 3.0 * se);
  }

  // KS at 1% against the analytic distribution
  const int m = 20000;
  for (double t : {0.25, 0.75}) {
    std::vector<double> xs(m);
    for (double& x : xs) x = sample_increment(t, c, cfg.increment_rate, rng);
    GammaParams p{increment_shape(t, c), cfg.increment_rate};
    const double d = testutil::ks_statistic(std::move(xs), [&](double v) { return gamma_cdf(p, v); });
    CHECK(d < testutil::ks_critical_1pct(m));
  }
}

TEST_CASE("latent path is monotone and crosses the threshold once") {
  SimProcessConfig cfg = desk_config();
  cfg.failure_threshold = calibrate_failure_threshold(cfg, 200);
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 30; ++rep) {
    LatentPath p = simulate_latent(cfg, 1.0, rng);
    REQUIRE(p.failure_step >= 0);
    for (size_t i = 1; i < p.z.size(); ++i) CHECK(p.z[i] >= p.z[i - 1]);
    for (int i = 0; i < p.failure_step; ++i) CHECK(p.z[i] < cfg.failure_threshold);
    CHECK(p.z[p.failure_step] >= cfg.failure_threshold);
    CHECK(static_cast<int>(p.z.size()) == p.failure_step + 1);
  }
}

TEST_CASE("calibrated threshold puts the median failure step in [0.3, 0.8] n_steps") {
  SimProcessConfig cfg = desk_config();
  cfg.failure_threshold = calibrate_failure_threshold(cfg, 500);
  CHECK(cfg.failure_threshold > 0);
  const double med = median_failure_step(cfg, 1.0, 300, 0xabc);
  CHECK(med >= 0.3 * cfg.n_steps);
  CHECK(med <= 0.8 * cfg.n_steps);
}

TEST_CASE("larger exponent delays failure") {
  SimProcessConfig cfg = desk_config();
  cfg.failure_threshold = calibrate_failure_threshold(cfg, 200);
  const double m_small = median_failure_step(cfg, 0.7, 200, 1);
  const double m_mid = median_failure_step(cfg, 1.0, 200, 2);
  const double m_large = median_failure_step(cfg, 1.4, 200, 3);
  CHECK(m_small < m_mid);
  CHECK(m_mid < m_large);
}

TEST_CASE("emit_segment") {
  SimProcessConfig cfg = desk_config();
  std::mt19937_64 rng(3);

  SimProcessConfig silent = cfg;
  silent.obs_noise_std = 0.0;
  silent.spike_count = 0;
  Tensor zero_seg = emit_segment(1.5, silent, rng);
  CHECK(zero_seg.values().abs().maxCoeff() == 0.0);

  // single spike at z = 0 has magnitude exactly a0
  SimProcessConfig one_spike = silent;
  one_spike.spike_count = 1;
  Tensor s = emit_segment(0.0, one_spike, rng);
  CHECK(s.values().abs().maxCoeff() == doctest::Approx(one_spike.spike_a0));
  int nonzero = 0;
  for (int i = 0; i < s.size(); ++i) nonzero += s.values()[i] != 0.0;
  CHECK(nonzero == 1);

  // non-spike samples have variance sigma_x^2
  SimProcessConfig noise_only = cfg;
  noise_only.spike_count = 0;
  noise_only.segment_length = 1000;
  double ss = 0;
  const int segs = 100;
  for (int i = 0; i < segs; ++i) {
    Tensor seg = emit_segment(0.5, noise_only, rng);
    ss += (seg.values() * seg.values()).sum();
  }
  const double n = segs * 1000.0;
  const double var = ss / n;
  const double sigma2 = noise_only.obs_noise_std * noise_only.obs_noise_std;
  const double band = 3.0 * sigma2 * std::sqrt(2.0 / n);
  CHECK(std::abs(var - sigma2) < band);
}

TEST_CASE("generate_dataset split, determinism, labels") {
  SimProcessConfig cfg = desk_config();
  SimDataset a = generate_dataset(cfg);
  CHECK(a.train.size() == 12);
  CHECK(a.test.size() == 3);
  CHECK(a.resolved_failure_threshold > 0);
  CHECK(a.resolved_latent_noise_std ==
        doctest::Approx(0.02 * a.resolved_failure_threshold));

  for (const Experiment& e : a.train) {
    e.validate();
    CHECK(e.num_observations() >= 1);
    for (int k = 0; k < e.num_observations(); ++k) CHECK(e.rul_at(k) > 0.0);
  }

  SimDataset b = generate_dataset(cfg);
  REQUIRE(b.train.size() == a.train.size());
  for (size_t i = 0; i < a.train.size(); ++i) {
    REQUIRE(a.train[i].num_observations() == b.train[i].num_observations());
    CHECK(a.train[i].failure_time == b.train[i].failure_time);
    for (int k = 0; k < a.train[i].num_observations(); ++k) {
      CHECK((a.train[i].segments[k].values() == b.train[i].segments[k].values()).all());
    }
  }

  // changing the seed changes the draw
  SimProcessConfig other = cfg;
  other.seed = 8;
  SimDataset c = generate_dataset(other);
  CHECK(c.train[0].failure_time != a.train[0].failure_time);
}

TEST_CASE("segment amplitude tracks the latent state") {
  SimProcessConfig cfg = desk_config();
  SimDataset ds = generate_dataset(cfg, 2, 1);
  for (const Experiment& e : ds.train) {
    if (e.num_observations() < 10) continue;
    std::vector<double> amp, z;
    for (int k = 0; k < e.num_observations(); ++k) {
      amp.push_back(e.segments[k].values().abs().maxCoeff());
      z.push_back(e.latent[k]);
    }
    CHECK(spearman(amp, z) > 0.0);
  }
}

TEST_CASE("dataset disk round trip") {
  testutil::TempDir dir("rulgn-sim");
  SimProcessConfig cfg = desk_config();
  cfg.n_steps = 120;
  SimDataset ds = generate_dataset(cfg, 3, 2);
  save_experiments(dir.str(), ds.train, ds.test);
  DiskDataset back = load_dataset(dir.str());
  REQUIRE(back.train.size() == 3);
  REQUIRE(back.test.size() == 2);
  for (size_t i = 0; i < back.train.size(); ++i) {
    const Experiment& x = ds.train[i];
    const Experiment& y = back.train[i];
    CHECK(x.id == y.id);
    CHECK(x.failure_time == y.failure_time);
    REQUIRE(x.timestamps == y.timestamps);
    CHECK(x.latent == y.latent);
    for (size_t k = 0; k < x.segments.size(); ++k) {
      CHECK(x.segments[k].shape() == y.segments[k].shape());
      CHECK((x.segments[k].values() == y.segments[k].values()).all());
    }
  }
  CHECK_THROWS_AS(load_dataset(dir.str() + "/nope"), std::runtime_error);
}
