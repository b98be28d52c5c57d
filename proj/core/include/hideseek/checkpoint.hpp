#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "hideseek/image.hpp"
#include "hideseek/nn.hpp"

namespace hideseek {

inline constexpr int kCheckpointFormatVersion = 1;

/// Everything needed to rebuild a trained model and to tell two trainings
/// apart. `parameter_hash` is recomputed on load and must match.
struct CheckpointManifest {
  int format_version = kCheckpointFormatVersion;
  std::string model_kind;  // "hsn-mae", "hsplus-masker", "hsplus-generator"
  int channels = 0;
  int width = 0;
  int height = 0;
  int patch_size = 1;
  std::uint64_t seed = 0;
  int epochs = 0;
  std::string dataset_id;
  nlohmann::json architecture = nlohmann::json::object();
  nlohmann::json training = nlohmann::json::object();
  std::vector<double> loss_history;
  std::string parameter_hash;
};

nlohmann::json manifest_to_json(const CheckpointManifest& m);
CheckpointManifest manifest_from_json(const nlohmann::json& j);

std::string hex64(std::uint64_t value);

/// FNV-1a over the shapes and values of a set of images, in order.
std::string dataset_fingerprint(std::span<const ImageTensor> images);

/// One JSON document {manifest, parameters}. The manifest's parameter_hash
/// is filled in here.
void save_checkpoint(const std::filesystem::path& path, CheckpointManifest manifest, const nn::ParameterList& params);

/// Reads the manifest only (to size a model before loading its weights).
CheckpointManifest read_manifest(const std::filesystem::path& path);

/// Loads weights into `params` (already sized from the manifest) and checks
/// the stored hash. Throws kModelMismatch on kind/shape/hash disagreement.
CheckpointManifest load_checkpoint(const std::filesystem::path& path, std::string_view expected_kind,
                                   const nn::ParameterList& params);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace hideseek
