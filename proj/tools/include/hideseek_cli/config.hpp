#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "hideseek/hsn.hpp"
#include "hideseek/hsplus.hpp"
#include "hideseek/manipulate.hpp"
#include "hideseek/masking.hpp"
#include "hideseek/synthetic.hpp"
#include "hideseek/watermark.hpp"

namespace hideseek::cli {

/// Either a directory of PNGs or a synthetic set generated on the fly.
struct DatasetSpec {
  std::optional<std::filesystem::path> path;
  int synthetic_count = 0;
  std::uint64_t synthetic_seed = 0;
  SyntheticOptions synthetic;
};

struct WatermarkSpec {
  WatermarkBand band = WatermarkBand::kHighFrequency;
  std::uint64_t seed = 1;
  int bits = 32;
  double strength = kDefaultSpreadSpectrumStrength;
  std::vector<int> ring_radii = {5};
  double ring_floor = kDefaultRingModulusFloor;
  double ring_pattern_scale = kDefaultRingPatternScale;
  std::optional<std::filesystem::path> key_path;  // overrides generation
};

enum class AttackMethod { kNone, kHsn, kHsPlus, kManipulation };

struct TheoremSpec {
  int instances = 1000;
  int min_n = 2;
  int max_n = 8;
};

struct ExperimentConfig {
  DatasetSpec dataset;                      // clean training / embedding input
  std::optional<DatasetSpec> eval_dataset;  // images to attack or evaluate
  std::optional<std::filesystem::path> reference_dir;  // evaluate: originals
  int image_width = 64;
  int image_height = 64;
  int patch_size = 8;
  MaskStrategy strategy;
  std::vector<double> beta_sweep = {0.60, 0.65, 0.70, 0.75, 0.80};
  std::vector<MaskKind> strategy_sweep = {MaskKind::kRandom, MaskKind::kContinuous, MaskKind::kScattered};
  double gamma = 10.0;
  double alpha = 1.0;
  LossWeights lambdas = kHsPlusWeights;
  DecodeMode decode = DecodeMode::sample(1.0, 0);
  OrderVariant order = OrderVariant::kOriginal;
  std::vector<OrderVariant> order_sweep = {OrderVariant::kOriginal, OrderVariant::kInverse, OrderVariant::kRandom};
  std::size_t max_hidden = 4096;
  double threshold = 0.5;                   // hardening threshold
  std::optional<std::size_t> hidden_budget;
  WatermarkSpec watermark;
  std::vector<Manipulation> manipulations;
  AttackMethod attack = AttackMethod::kHsn;
  std::vector<std::uint64_t> seeds = {1};
  double fpr = kDefaultDetectionFpr;
  std::filesystem::path output_dir = "hideseek-out";
  int workers = 1;
  HsnConfig hsn;
  MaskerConfig masker;
  GeneratorConfig generator;
  std::optional<std::filesystem::path> hsn_checkpoint;
  std::optional<std::filesystem::path> masker_checkpoint;
  std::optional<std::filesystem::path> generator_checkpoint;
  std::vector<nlohmann::json> loss_variants;  // ablate-losses: partial lambda objects
  TheoremSpec theorem;
  ExtractorKind lpips_extractor = ExtractorKind::kRandomConv;
  bool save_images = true;
};

/// Parses and validates. Relative paths resolve against `base_dir`. Throws
/// Error(kInvalidConfig) for anything malformed or out of range and
/// Error(kMissingFile) for referenced paths that do not exist.
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& file);

/// Fully resolved snapshot, suitable for replay.
nlohmann::json to_json(const ExperimentConfig& c);

/// HIDESEEK_OUTPUT_DIR and HIDESEEK_WORKERS; nothing else is read from the
/// environment.
void apply_environment(ExperimentConfig& c);

std::string_view to_string(AttackMethod m);

}  // namespace hideseek::cli
