#pragma once

namespace rulgn {

/// log Gamma(x) for x > 0, Lanczos approximation (g=7, 9 terms).
/// Absolute error below 1e-10 on [0.1, 50].
double lgamma_approx(double x);

/// Digamma psi(x) for x > 0: upward recurrence into the asymptotic region,
/// then the Bernoulli series.
double digamma(double x);

/// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
/// Series expansion for x < a + 1, continued fraction otherwise.
double gamma_p(double a, double x);

}  // namespace rulgn
