#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "fmbeam/params.hpp"
#include "fmbeam/tensor.hpp"

namespace fmbeam {

/// Self-describing parameter container.
///
/// Binary layout (little-endian):
///   magic "FMBCKPT\0" | u32 version | u64 len | config JSON bytes
///   | u64 count | count x (u32 name_len | name | u32 rank | u64 dims[rank]
///   | f64 values[prod(dims)])
/// Doubles are stored raw, so values round-trip bit-exactly.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::string config_json;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor* find(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies every parameter of the store into `ckpt` under its own name.
void store_params(Checkpoint& ckpt, const ParamStore& params);
// Overwrites store values from `ckpt`; names and shapes must match exactly.
void restore_params(const Checkpoint& ckpt, ParamStore& params);

}  // namespace fmbeam
