#include "rulgn/prob.hpp"

#include "rulgn/ops.hpp"
#include "rulgn/special.hpp"

#include <cmath>
#include <stdexcept>

namespace rulgn {

void GammaParams::validate() const {
  if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
    throw std::domain_error("gamma params: alpha and beta must be finite and > 0");
  }
}

double gamma_log_pdf(const GammaParams& p, double y) {
  p.validate();
  if (!(y > 0.0)) throw std::domain_error("gamma_log_pdf: requires y > 0");
  return p.alpha * std::log(p.beta) - lgamma_approx(p.alpha) + (p.alpha - 1.0) * std::log(y) -
         p.beta * y;
}

double gamma_cdf(const GammaParams& p, double y) {
  p.validate();
  if (y <= 0.0) return 0.0;
  return gamma_p(p.alpha, p.beta * y);
}

GammaStats gamma_stats(const GammaParams& p) {
  p.validate();
  GammaStats s{p.alpha / p.beta, p.alpha / (p.beta * p.beta), std::nullopt};
  if (p.alpha > 1.0) s.mode = (p.alpha - 1.0) / p.beta;
  return s;
}

double gamma_quantile(const GammaParams& p, double q) {
  p.validate();
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("gamma_quantile: q must be in (0,1)");
  double lo = 0.0;
  double hi = (p.alpha + 10.0 * std::sqrt(p.alpha) + 10.0) / p.beta;
  while (gamma_p(p.alpha, p.beta * hi) < q) {
    hi *= 2.0;
    if (hi > 1e300) throw std::runtime_error("gamma_quantile: bracket overflow");
  }
  // bisection to 1e-10 relative width
  for (int it = 0; it < 200 && (hi - lo) > 1e-10 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (gamma_p(p.alpha, p.beta * mid) < q) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double gamma_sample(const GammaParams& p, std::mt19937_64& rng) {
  p.validate();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  double alpha = p.alpha;
  double boost = 1.0;
  if (alpha < 1.0) {
    // Gamma(a) = Gamma(a+1) * U^(1/a)
    double u = unif(rng);
    while (u <= 0.0) u = unif(rng);
    boost = std::pow(u, 1.0 / alpha);
    alpha += 1.0;
  }

  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = unif(rng);
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return boost * d * v / p.beta;
    if (u > 0.0 && std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) {
      return boost * d * v / p.beta;
    }
  }
}

Tensor nll_loss(const Tensor& alpha, const Tensor& beta, const std::vector<double>& y) {
  if (alpha.ndim() != 1 || beta.ndim() != 1 || alpha.dim(0) != beta.dim(0)) {
    throw std::invalid_argument("nll_loss: alpha and beta must be [B] with equal length");
  }
  const int n = alpha.dim(0);
  if (n < 1 || static_cast<int>(y.size()) != n) {
    throw std::invalid_argument("nll_loss: batch must be nonempty and match y");
  }
  Array ya(n), log_ya(n);
  for (int i = 0; i < n; ++i) {
    if (!(y[i] > 0.0)) throw std::domain_error("nll_loss: targets must be > 0");
    ya[i] = y[i];
    log_ya[i] = std::log(y[i]);
  }
  Tensor yt({n}, ya);
  Tensor log_yt({n}, log_ya);
  // -log f = lnGamma(a) - a ln b - (a - 1) ln y + b y
  Tensor per = add(sub(lgamma(alpha), mul(alpha, log(beta))),
                   sub(mul(beta, yt), mul(add_scalar(alpha, -1.0), log_yt)));
  return sum(per);
}

double nll_value(const std::vector<GammaParams>& params, const std::vector<double>& y) {
  if (params.empty() || params.size() != y.size()) {
    throw std::invalid_argument("nll_value: batch must be nonempty and match y");
  }
  double s = 0.0;
  for (size_t i = 0; i < params.size(); ++i) s -= gamma_log_pdf(params[i], y[i]);
  return s;
}

}  // namespace rulgn
