#pragma once

#include "rulgn/tensor.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace testutil {

using rulgn::Array;
using rulgn::Tensor;

inline bool close(double a, double b, double rtol, double atol = 1e-9) {
  return std::abs(a - b) <= atol + rtol * std::max(std::abs(a), std::abs(b));
}

inline bool all_close(const Array& a, const Array& b, double rtol, double atol = 1e-9) {
  if (a.size() != b.size()) return false;
  for (int i = 0; i < a.size(); ++i) {
    if (!close(a[i], b[i], rtol, atol)) return false;
  }
  return true;
}

/// Central finite differences of a scalar-valued function of a flat vector.
/// Independent of the tape machinery by construction.
inline Array finite_difference(const std::function<double(const Array&)>& f, const Array& x0,
                               double h = 1e-5) {
  Array g(x0.size());
  Array x = x0;
  for (int i = 0; i < x0.size(); ++i) {
    x[i] = x0[i] + h;
    const double fp = f(x);
    x[i] = x0[i] - h;
    const double fm = f(x);
    x[i] = x0[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline Array random_array(int n, std::mt19937_64& rng, double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Array a(n);
  for (int i = 0; i < n; ++i) a[i] = u(rng);
  return a;
}

/// Digamma by an independent route: psi(x) = -gamma + sum_{n>=0} (1/(n+1) - 1/(n+x)),
/// truncated at N with the integral tail estimate (x-1)/(N + (x+1)/2).
inline double digamma_series(double x) {
  const double euler_gamma = 0.57721566490153286060651209008;
  const long N = 3000000;
  double s = -euler_gamma;
  for (long n = 0; n < N; ++n) s += 1.0 / (n + 1.0) - 1.0 / (n + x);
  s += (x - 1.0) / (N + 0.5 * (x + 1.0));
  return s;
}

/// Adaptive Simpson quadrature.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-10, int depth = 30) {
  struct Rec {
    static double run(const std::function<double(double)>& f, double a, double m, double b,
                      double fa, double fm, double fb, double whole, double tol, int depth) {
      const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
      const double flm = f(lm), frm = f(rm);
      const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
      const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
      if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
      }
      return run(f, a, lm, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
             run(f, m, rm, b, fm, frm, fb, right, tol / 2.0, depth - 1);
    }
  };
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return Rec::run(f, a, m, b, fa, fm, fb, whole, tol, depth);
}

/// One-sample Kolmogorov-Smirnov statistic against an analytic CDF.
inline double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (size_t i = 0; i < samples.size(); ++i) {
    const double c = cdf(samples[i]);
    d = std::max(d, std::abs(c - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - c));
  }
  return d;
}

/// 99% critical value of the one-sample KS statistic (asymptotic).
inline double ks_critical_1pct(size_t n) { return 1.62762 / std::sqrt(static_cast<double>(n)); }

/// Unique scratch directory, removed when the object dies.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    auto base = std::filesystem::temp_directory_path();
    for (int i = 0;; ++i) {
      auto candidate = base / (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(i));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = candidate;
        break;
      }
    }
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace testutil
