#ifndef DELAYCAST_MODEL_IO_HPP
#define DELAYCAST_MODEL_IO_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

#include "delaycast/model.hpp"

namespace delaycast {

// File layout:
//   DELAYCAST-MODEL v1\n
//   <manifest byte length>\n
//   <manifest JSON>
//   <tensor data, little-endian float64, row-major, in manifest order>
// The manifest carries a 64-bit FNV-1a checksum of the tensor section.

inline constexpr std::string_view kModelMagic = "DELAYCAST-MODEL";
inline constexpr int kModelFormatVersion = 1;

struct CheckpointInfo {
  int epoch = 0;
  nlohmann::json metrics;
};

std::uint64_t fnv1a64(std::string_view bytes);

std::string serialize_model(const Model& model,
                            const std::optional<CheckpointInfo>& checkpoint = {});
/// Throws ModelFileError with code "format", "version", "checksum" or
/// "kind" (when `expected` is given and differs).
std::unique_ptr<Model> deserialize_model(std::string_view bytes,
                                         std::optional<ModelKind> expected = {});

/// Writes through a temporary file and rename, so an interrupted save never
/// clobbers the previous file.
void save_model(const Model& model, const std::string& path,
                const std::optional<CheckpointInfo>& checkpoint = {});
std::unique_ptr<Model> load_model(const std::string& path,
                                  std::optional<ModelKind> expected = {});
/// Parsed manifest only; no checksum verification.
nlohmann::json read_model_manifest(const std::string& path);

}  // namespace delaycast

#endif  // DELAYCAST_MODEL_IO_HPP
