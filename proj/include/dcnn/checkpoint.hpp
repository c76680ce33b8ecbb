#pragma once

#include <stdexcept>
#include <string>

#include "dcnn/params.hpp"

namespace dcnn {

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { Io, BadMagic, Version, Truncated, DimsMismatch, Format };
  CheckpointError(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Binary checkpoint, little-endian throughout:
///   "DCNN" | u32 version=1 | u64 len + architecture JSON |
///   u64 array count | arrays: u32 name len, name, u8 flags
///   (bit0 trainable, bit1 running-stat), u32 rank, u32 dims[rank],
///   u64 numel, f32 data[numel]
/// Loading a file whose dims product disagrees with numel, whose magic or
/// version is wrong, or that ends early raises a distinct error; nothing
/// is partially loaded.
void save_checkpoint(const ModelSpec& spec, const ParamStore& params, const BnStats& stats,
                     const std::string& path);

struct LoadedCheckpoint {
  ModelSpec model;
  ParamStore params;
  BnStats stats;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace dcnn
