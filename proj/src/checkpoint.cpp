#include "rulgn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace rulgn {

namespace {

constexpr char kMagic[8] = {'R', 'G', 'N', 'P', 'A', 'R', 'M', '1'};

void require_little_endian() {
  if constexpr (std::endian::native != std::endian::little) {
    throw std::runtime_error("checkpoint: container format is little-endian only");
  }
}

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

}  // namespace

void save_tensors(const std::string& path, const TensorMap& tensors) {
  require_little_endian();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
  os.write(kMagic, sizeof(kMagic));
  write_pod<uint32_t>(os, static_cast<uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    write_pod<uint32_t>(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod<uint32_t>(os, static_cast<uint32_t>(t.ndim()));
    for (int d : t.shape()) write_pod<uint32_t>(os, static_cast<uint32_t>(d));
    os.write(reinterpret_cast<const char*>(t.values().data()),
             static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed: " + path);
}

TensorMap load_tensors(const std::string& path) {
  require_little_endian();
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path);
  }
  const uint32_t count = read_pod<uint32_t>(is);
  TensorMap out;
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t name_len = read_pod<uint32_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const uint32_t ndim = read_pod<uint32_t>(is);
    std::vector<int> shape(ndim);
    int total = 1;
    for (uint32_t d = 0; d < ndim; ++d) {
      shape[d] = static_cast<int>(read_pod<uint32_t>(is));
      total *= shape[d];
    }
    Array values(total);
    is.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(total * sizeof(double)));
    if (!is) throw std::runtime_error("checkpoint: truncated tensor data in " + path);
    out.emplace(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  return out;
}

void write_tensor_manifest(const std::string& path, const TensorMap& tensors) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
  os << "# name shape\n";
  for (const auto& [name, t] : tensors) {
    os << name;
    for (size_t i = 0; i < t.shape().size(); ++i) os << (i ? "x" : " ") << t.shape()[i];
    os << "\n";
  }
}

}  // namespace rulgn
