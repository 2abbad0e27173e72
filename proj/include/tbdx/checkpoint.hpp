#pragma once

#include <filesystem>

#include "tbdx/model.hpp"

namespace tbdx {

/// Storage precision of the checkpoint payload. Weights live in memory as
/// doubles either way; f32 halves the file at the cost of one rounding.
enum class CheckpointDtype { kF32, kF64 };

/// Container layout: magic "TBDX", little-endian u32 format version,
/// little-endian u64 directory length, a JSON directory (architecture,
/// LSTM gate order, and per-tensor name/dtype/shape/offset/length), then the
/// raw little-endian IEEE-754 payload the directory points into.
inline constexpr char kCheckpointMagic[4] = {'T', 'B', 'D', 'X'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const ModelParams& m,
                     CheckpointDtype dtype = CheckpointDtype::kF64);

/// Rebuilds the model from the directory; every tensor is reproduced
/// bit-exactly at the stored precision. Malformed or truncated containers
/// raise IoError.
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace tbdx
