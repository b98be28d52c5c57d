#include "hideseek/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include "hideseek/error.hpp"

namespace hideseek {

namespace {
constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}
}  // namespace

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string dataset_fingerprint(std::span<const ImageTensor> images) {
  std::uint64_t h = kFnvOffset;
  for (const auto& img : images) {
    const int dims[3] = {img.channels(), img.width(), img.height()};
    fnv_bytes(h, dims, sizeof dims);
    for (double v : img.values()) fnv_bytes(h, &v, sizeof v);
  }
  return hex64(h);
}

nlohmann::json manifest_to_json(const CheckpointManifest& m) {
  return {{"format_version", m.format_version},
          {"model_kind", m.model_kind},
          {"shape", {{"channels", m.channels}, {"width", m.width}, {"height", m.height}}},
          {"patch_size", m.patch_size},
          {"seed", m.seed},
          {"epochs", m.epochs},
          {"dataset_id", m.dataset_id},
          {"architecture", m.architecture},
          {"training", m.training},
          {"loss_history", m.loss_history},
          {"parameter_hash", m.parameter_hash}};
}

CheckpointManifest manifest_from_json(const nlohmann::json& j) {
  try {
    CheckpointManifest m;
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kCheckpointFormatVersion) {
      fail(ErrorCode::kModelMismatch, "unsupported checkpoint format version", std::to_string(m.format_version));
    }
    m.model_kind = j.at("model_kind").get<std::string>();
    const auto& shape = j.at("shape");
    m.channels = shape.at("channels").get<int>();
    m.width = shape.at("width").get<int>();
    m.height = shape.at("height").get<int>();
    m.patch_size = j.at("patch_size").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.epochs = j.at("epochs").get<int>();
    m.dataset_id = j.at("dataset_id").get<std::string>();
    m.architecture = j.at("architecture");
    m.training = j.at("training");
    m.loss_history = j.at("loss_history").get<std::vector<double>>();
    m.parameter_hash = j.at("parameter_hash").get<std::string>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kCorruptData, std::string("malformed checkpoint manifest: ") + e.what());
  }
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kMissingFile, "cannot open file", path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kCorruptData, std::string("invalid JSON: ") + e.what(), path.string());
  }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write file", path.string());
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorCode::kIo, "write failed", path.string());
}

void save_checkpoint(const std::filesystem::path& path, CheckpointManifest manifest,
                     const nn::ParameterList& params) {
  manifest.parameter_hash = hex64(nn::parameter_hash(params));
  write_json_file(path, {{"manifest", manifest_to_json(manifest)}, {"parameters", nn::parameters_to_json(params)}});
}

CheckpointManifest read_manifest(const std::filesystem::path& path) {
  const auto j = read_json_file(path);
  if (!j.contains("manifest")) fail(ErrorCode::kCorruptData, "checkpoint has no manifest", path.string());
  return manifest_from_json(j.at("manifest"));
}

CheckpointManifest load_checkpoint(const std::filesystem::path& path, std::string_view expected_kind,
                                   const nn::ParameterList& params) {
  const auto j = read_json_file(path);
  if (!j.contains("manifest") || !j.contains("parameters")) {
    fail(ErrorCode::kCorruptData, "checkpoint is missing sections", path.string());
  }
  CheckpointManifest m = manifest_from_json(j.at("manifest"));
  if (m.model_kind != expected_kind) {
    fail(ErrorCode::kModelMismatch, "checkpoint holds a different model kind", m.model_kind);
  }
  nn::parameters_from_json(j.at("parameters"), params);
  if (hex64(nn::parameter_hash(params)) != m.parameter_hash) {
    fail(ErrorCode::kModelMismatch, "checkpoint parameters do not match their recorded hash", path.string());
  }
  return m;
}

}  // namespace hideseek
