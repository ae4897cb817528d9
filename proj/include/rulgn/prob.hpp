#pragma once

#include "rulgn/tensor.hpp"

#include <optional>
#include <random>
#include <vector>

namespace rulgn {

/// Gamma distribution with shape alpha and rate beta, both strictly
/// positive. Mean alpha/beta.
struct GammaParams {
  double alpha = 1.0;
  double beta = 1.0;

  void validate() const;
};

/// log f(y) = alpha ln beta - lnGamma(alpha) + (alpha-1) ln y - beta y, y > 0.
double gamma_log_pdf(const GammaParams& p, double y);

double gamma_cdf(const GammaParams& p, double y);

struct GammaStats {
  double mean;
  double variance;
  std::optional<double> mode;  // defined for alpha > 1
};
GammaStats gamma_stats(const GammaParams& p);

/// Inverse CDF by bracketing + bisection to 1e-10 relative width, q in (0,1).
double gamma_quantile(const GammaParams& p, double q);

/// Marsaglia-Tsang squeeze; alpha < 1 boosted via Gamma(alpha+1) * U^(1/alpha).
double gamma_sample(const GammaParams& p, std::mt19937_64& rng);

/// Batch negative log-likelihood, summed: sum_i -log f(y_i; alpha_i, beta_i).
/// alpha and beta are [B] tensors (tracked for training); y values must be
/// strictly positive.
Tensor nll_loss(const Tensor& alpha, const Tensor& beta, const std::vector<double>& y);

/// Plain-number counterpart for evaluation paths.
double nll_value(const std::vector<GammaParams>& params, const std::vector<double>& y);

}  // namespace rulgn
