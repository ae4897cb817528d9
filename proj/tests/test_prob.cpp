#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rulgn/ops.hpp"
#include "rulgn/prob.hpp"
#include "rulgn/special.hpp"

#include "testutil.hpp"

#include <cmath>
#include <random>

using namespace rulgn;
using testutil::close;

TEST_CASE("gamma log pdf examples") {
  CHECK(gamma_log_pdf({1, 1}, 2.0) == doctest::Approx(-2.0));
  CHECK(gamma_log_pdf({2, 1}, 1.0) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(gamma_log_pdf({1, 1}, 0.0), std::domain_error);
  CHECK_THROWS_AS(gamma_log_pdf({-1, 1}, 1.0), std::domain_error);
}

TEST_CASE("density integrates to one") {
  // substitute y = u^2 so the alpha < 1 endpoint is regular
  auto total_mass = [](double alpha, double beta) {
    return testutil::adaptive_simpson(
        [&](double u) {
          const double y = u * u;
          return y > 0 ? 2.0 * u * std::exp(gamma_log_pdf({alpha, beta}, y)) : 0.0;
        },
        0.0, std::sqrt(50.0), 1e-10);
  };
  CHECK(close(total_mass(2.5, 1.3), 1.0, 0, 1e-6));
  for (double alpha : {0.5, 1.0, 2.0, 5.0}) {
    for (double beta : {0.5, 1.0, 2.0, 5.0}) {
      const double tail = 1.0 - gamma_p(alpha, beta * 50.0);
      CHECK(std::abs(total_mass(alpha, beta) + tail - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("nll examples and additivity") {
  Tensor a1 = Tensor::vector({1.0});
  Tensor b1 = Tensor::vector({1.0});
  CHECK(nll_loss(a1, b1, {2.0}).value() == doctest::Approx(2.0));

  Tensor a2 = Tensor::vector({1.0, 1.0});
  Tensor b2 = Tensor::vector({1.0, 1.0});
  CHECK(nll_loss(a2, b2, {2.0, 2.0}).value() == doctest::Approx(4.0));

  CHECK_THROWS_AS(nll_loss(a1, b1, {0.0}), std::domain_error);
  CHECK(nll_value({{1, 1}}, {2.0}) == doctest::Approx(2.0));
}

TEST_CASE("nll tape gradients match the closed forms") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.3, 4.0);
  for (int rep = 0; rep < 20; ++rep) {
    const double alpha = u(rng), beta = u(rng), y = u(rng);
    Tape tape;
    Tensor at = tape.leaf(Tensor::vector({alpha}));
    Tensor bt = tape.leaf(Tensor::vector({beta}));
    tape.backward(nll_loss(at, bt, {y}));
    const double da = tape.grad(at).value();
    const double db = tape.grad(bt).value();
    // d nll / d alpha = psi(alpha) - ln beta - ln y ; d nll / d beta = y - alpha/beta
    CHECK(close(da, digamma(alpha) - std::log(beta) - std::log(y), 1e-6));
    CHECK(close(db, y - alpha / beta, 1e-6));

    // and both match finite differences
    auto f = [&](double a2, double b2) {
      return nll_loss(Tensor::vector({a2}), Tensor::vector({b2}), {y}).value();
    };
    const double h = 1e-6;
    CHECK(close(da, (f(alpha + h, beta) - f(alpha - h, beta)) / (2 * h), 1e-6, 1e-7));
    CHECK(close(db, (f(alpha, beta + h) - f(alpha, beta - h)) / (2 * h), 1e-6, 1e-7));
  }
}

TEST_CASE("gamma stats") {
  GammaStats s = gamma_stats({2, 4});
  CHECK(s.mean == doctest::Approx(0.5));
  CHECK(s.variance == doctest::Approx(0.125));
  REQUIRE(s.mode.has_value());
  CHECK(*s.mode == doctest::Approx(0.25));
  CHECK_FALSE(gamma_stats({1, 4}).mode.has_value());
}

TEST_CASE("monte carlo mean matches alpha/beta") {
  std::mt19937_64 rng(2);
  const GammaParams p{3.0, 2.0};
  const int n = 1000000;
  double s = 0;
  for (int i = 0; i < n; ++i) s += gamma_sample(p, rng);
  const double m = s / n;
  const double sigma = std::sqrt(p.alpha) / p.beta / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(m - 1.5) < 3.0 * sigma);
}

TEST_CASE("quantile") {
  CHECK(close(gamma_quantile({1, 1}, 0.5), std::log(2.0), 1e-9));

  // round trip through the CDF
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.2, 5.0);
  for (int rep = 0; rep < 10; ++rep) {
    GammaParams p{u(rng), u(rng)};
    const double y = u(rng);
    CHECK(close(gamma_quantile(p, gamma_cdf(p, y)), y, 1e-8));
  }

  // strictly increasing in q
  GammaParams p{2.2, 1.7};
  double prev = 0.0;
  for (double q = 0.05; q < 1.0; q += 0.05) {
    const double v = gamma_quantile(p, q);
    CHECK(v > prev);
    prev = v;
  }
  CHECK_THROWS_AS(gamma_quantile(p, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(gamma_quantile(p, 1.0), std::invalid_argument);
}

TEST_CASE("central interval covers ~95% of samples") {
  std::mt19937_64 rng(4);
  const GammaParams p{2.5, 0.8};
  const double lo = gamma_quantile(p, 0.025), hi = gamma_quantile(p, 0.975);
  const int n = 100000;
  int inside = 0;
  for (int i = 0; i < n; ++i) {
    const double x = gamma_sample(p, rng);
    CHECK(x > 0.0);
    if (x >= lo && x <= hi) ++inside;
  }
  const double frac = static_cast<double>(inside) / n;
  const double sigma = std::sqrt(0.95 * 0.05 / n);
  CHECK(std::abs(frac - 0.95) < 3.0 * sigma);
}

TEST_CASE("sampler passes KS against the analytic CDF") {
  std::mt19937_64 rng(5);
  const int n = 20000;
  for (GammaParams p : {GammaParams{0.5, 1.0}, GammaParams{1.0, 2.0}, GammaParams{3.0, 0.7},
                        GammaParams{8.0, 4.0}}) {
    std::vector<double> xs(n);
    for (double& x : xs) x = gamma_sample(p, rng);
    const double d = testutil::ks_statistic(std::move(xs), [&](double v) { return gamma_cdf(p, v); });
    CHECK(d < testutil::ks_critical_1pct(n));
  }
}
