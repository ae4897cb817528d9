#pragma once

#include "rulgn/tensor.hpp"

#include <map>
#include <string>

namespace rulgn {

using TensorMap = std::map<std::string, Tensor>;

/// Flat binary container: magic, entry count, then per entry the name,
/// shape and little-endian 64-bit values.
void save_tensors(const std::string& path, const TensorMap& tensors);
TensorMap load_tensors(const std::string& path);

/// Plain-text companion listing names and shapes, one line each.
void write_tensor_manifest(const std::string& path, const TensorMap& tensors);

}  // namespace rulgn
