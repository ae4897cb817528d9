#pragma once

#include "rulgn/tensor.hpp"

#include <random>
#include <vector>

namespace rulgn {

// Differentiable primitives. Each returns a fresh tensor; when any argument
// is tracked, the result is tracked on the same tape. Shapes are checked up
// front and violations throw std::invalid_argument; domain violations throw
// std::domain_error.

// -- arithmetic (same shape unless noted) --
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);

// -- linear algebra --
Tensor matmul(const Tensor& a, const Tensor& b);        // [m,k]x[k,n]
Tensor add_bias_rows(const Tensor& m, const Tensor& b);  // m[i,j] + b[j]
Tensor add_bias_channels(const Tensor& x, const Tensor& b);  // x[c,l] + b[c]

// -- convolution & pooling, channels-first [C x L] --
/// Cross-correlation; output length floor((L + 2 pad - k)/stride) + 1.
Tensor conv1d(const Tensor& x, const Tensor& kernels, int stride, int padding);
Tensor avg_pool1d(const Tensor& x, int k, int stride);
Tensor global_avg_pool(const Tensor& x);  // [C x L] -> [C]

// -- pointwise nonlinearities --
enum class Unary { Relu, LeakyRelu, Sigmoid, Tanh, Softplus, Exp, Log, Lgamma };
Tensor elementwise(Unary op, const Tensor& x);
Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x);  // slope 0.01
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor softplus(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);     // x > 0
Tensor lgamma(const Tensor& x);  // x > 0; backward uses digamma

/// Training mode zeroes each element with probability `rate` and scales the
/// survivors by 1/(1-rate); otherwise the input passes through unchanged.
Tensor dropout(const Tensor& x, double rate, bool training, std::mt19937_64& rng);

// -- shape & indexing --
Tensor reshape(const Tensor& x, std::vector<int> shape);
Tensor concat(const std::vector<Tensor>& xs, int axis);
Tensor slice(const Tensor& x, int axis, int start, int count);
Tensor gather_rows(const Tensor& x, const std::vector<int>& idx);

// -- reductions --
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor sum(const Tensor& x, int axis);   // 2-D input, result 1-D
Tensor mean(const Tensor& x, int axis);

}  // namespace rulgn
