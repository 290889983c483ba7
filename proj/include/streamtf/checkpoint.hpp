#pragma once

#include <filesystem>
#include <optional>

#include "streamtf/model.hpp"

STREAMTF_NS_BEGIN

// Layout (all integers little-endian):
//   8 bytes  magic "STFCKPT\0"
//   u32      format version (1)
//   u32      length of the config JSON in bytes
//   bytes    canonical ModelConfig JSON
//   u64      total number of weights
//   f32[]    weights, parameter by parameter in declaration order
inline constexpr std::uint32_t kCheckpointVersion = 1;

// The file's config differs from the one the caller expected.
class CheckpointMismatch : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

void save_checkpoint(const std::filesystem::path& path, const Model& model);
Model load_checkpoint(const std::filesystem::path& path);
// Raises CheckpointMismatch unless the stored config equals `expected`.
Model load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected);

STREAMTF_NS_END
