#pragma once

// BCNW v1 tensor container. Little-endian throughout:
//
//   "BCNW" | u32 version (1) | u32 tensor count
//   per tensor: u16 name length | name bytes (UTF-8) | u8 rank | rank x u32 dims
//               | product(dims) x f32 row-major data
//
// No padding or alignment anywhere.

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bcnet/tensor.hpp"

namespace bcnet {

enum class WeightErrorKind {
  io,
  bad_magic,
  version_mismatch,
  truncated,
  trailing_bytes,
  bad_header,
  duplicate_name,
  missing_tensor,
  shape_mismatch,
};

const char* to_string(WeightErrorKind kind);

class WeightFileError : public std::runtime_error {
 public:
  WeightFileError(WeightErrorKind kind, std::string tensor, const std::string& detail);

  WeightErrorKind kind() const { return kind_; }
  /// Name of the offending tensor, empty for file-level errors.
  const std::string& tensor() const { return tensor_; }

 private:
  WeightErrorKind kind_;
  std::string tensor_;
};

/// Ordered name -> tensor map. Iteration order is insertion (file) order.
class WeightStore {
 public:
  void add(std::string name, Tensor tensor);

  bool contains(std::string_view name) const;
  const Tensor& get(std::string_view name) const;
  const Tensor* find(std::string_view name) const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

constexpr std::uint32_t kBcnwVersion = 1;
constexpr std::size_t kMaxTensorNameBytes = 255;

std::vector<std::uint8_t> encode_weights(const WeightStore& store);
WeightStore decode_weights(std::span<const std::uint8_t> bytes);

void save_weights(const std::filesystem::path& path, const WeightStore& store);
WeightStore load_weights(const std::filesystem::path& path);

/// FNV-1a 64 over the tensor's little-endian f32 payload.
std::uint64_t tensor_checksum(const Tensor& t);
/// Checksum over every name, dims and payload in order.
std::uint64_t store_checksum(const WeightStore& store);

}  // namespace bcnet
