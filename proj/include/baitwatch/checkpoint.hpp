#pragma once

// Binary model checkpoints, little-endian:
//   "BWCK" | u32 version | u8 kind | u8 ip | u32 tensor count |
//   per tensor: u16 name length, name, u8 rank, u32 dims..., f32 data...

#include <stdexcept>
#include <string>
#include <string_view>

#include "baitwatch/encoders.hpp"

namespace baitwatch {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string serialize_checkpoint(const Model<float>& model);
// Throws CheckpointError on truncation, bad magic or version, or a tensor set
// that does not match the declared kind.
Model<float> deserialize_checkpoint(std::string_view bytes);

// Written to a temporary file and renamed into place.
void save_checkpoint(const std::string& path, const Model<float>& model);
Model<float> load_checkpoint(const std::string& path);

}  // namespace baitwatch
