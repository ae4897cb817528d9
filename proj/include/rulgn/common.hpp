#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <stdexcept>
#include <string>

namespace rulgn {

// All numerics are 64-bit. Flat storage is row-major everywhere a tensor is
// viewed as a matrix.
using Array = Eigen::ArrayXd;
using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<MatrixRM>;
using ConstMatMap = Eigen::Map<const MatrixRM>;

/// Non-finite values in a forward pass, a gradient, or a loss.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Independent RNG stream id for (base seed, path). Used so that experiments,
/// epochs and anchors each get their own deterministic stream.
inline uint64_t derive_seed(uint64_t base, std::initializer_list<uint64_t> path) {
  uint64_t s = splitmix64(base);
  for (uint64_t p : path) s = splitmix64(s ^ p);
  return s;
}

inline uint64_t hash_string(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Runs body(i) for i in [0, n). Results must not depend on scheduling; the
/// caller owns any ordered reduction over i.
void parallel_for(int n, int threads, const std::function<void(int)>& body);

}  // namespace rulgn
