#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dxml/pipeline.hpp"

namespace dxml {

/// Binary model file:
///
///     "DXML" | u32 version | u64 payload bytes | payload | u32 CRC-32(payload)
///
/// All integers little-endian. The payload holds the run configuration
/// (reals as f64), dimensions, and the numeric tensors as f32 in the layout
/// of their in-memory containers: V label by label, W1 and W2 row-major,
/// centers and training embeddings column by column, followed by cluster
/// assignments and the training label sets.
inline constexpr std::uint32_t kModelFormatVersion = 1;

std::vector<std::uint8_t> serialize_model(const ModelArtifacts& model);
/// Throws DataError: bad magic, unsupported version, checksum mismatch
/// (including truncation) or an inconsistent payload.
ModelArtifacts deserialize_model(const std::vector<std::uint8_t>& bytes);

void save_model(const ModelArtifacts& model, const std::string& path);
ModelArtifacts load_model(const std::string& path);

}  // namespace dxml
