#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hideseek/features.hpp"
#include "hideseek/image.hpp"
#include "hideseek/losses.hpp"
#include "hideseek/mask.hpp"
#include "hideseek/nn.hpp"
#include "hideseek/rng.hpp"

namespace hideseek {

/// H: image -> per-pixel logit map of the same extent.
class MaskingModel {
 public:
  virtual ~MaskingModel() = default;
  [[nodiscard]] virtual RealMap logits(const ImageTensor& image) const = 0;
  [[nodiscard]] virtual std::string id() const = 0;
};

/// Returns a fixed logit map whatever the image; used to drive the attack
/// with hand-chosen scores.
class FixedLogitMasker final : public MaskingModel {
 public:
  explicit FixedLogitMasker(RealMap logits) : logits_(std::move(logits)) {}
  [[nodiscard]] RealMap logits(const ImageTensor& image) const override;
  [[nodiscard]] std::string id() const override { return "fixed"; }

 private:
  RealMap logits_;
};

/// conv3x3(C->k) ReLU, conv3x3(k->k) ReLU, conv1x1(k->1).
class ConvMasker final : public MaskingModel {
 public:
  ConvMasker(int channels, int hidden, std::uint64_t init_seed);

  [[nodiscard]] RealMap logits(const ImageTensor& image) const override;
  [[nodiscard]] std::string id() const override { return "conv-masker"; }
  [[nodiscard]] int channels() const noexcept { return channels_; }
  [[nodiscard]] int hidden() const noexcept { return hidden_; }

  /// Logits of a unit-float image, keeping what backward() needs.
  struct Trace {
    nn::FeatureMap input, pre1, act1, pre2, act2;
  };
  RealMap forward(const ImageTensor& image, Trace& trace) const;
  /// Accumulates parameter gradients from d loss / d logits.
  void backward(const Trace& trace, const RealMap& grad_logits);

  nn::ParameterList parameters();

  std::uint64_t seed = 0;
  int epochs = 0;
  std::string dataset_id;
  std::vector<double> loss_history;
  nlohmann::json training_config = nlohmann::json::object();

 private:
  int channels_;
  int hidden_;
  nn::Conv2d conv1_;
  nn::Conv2d conv2_;
  nn::Conv2d conv3_;
};

enum class EmbedderKind { kRandomConv, kIdentity };

/// Default HS+ loss weights: area, frequency, semantic, pixel, perceptual.
inline constexpr LossWeights kHsPlusWeights{1.0, 1.5e5, 1.45e8, 1.0, 1.0};

struct MaskerConfig {
  int hidden = 8;
  int epochs = 10;
  int batch_size = 4;
  double learning_rate = 1e-3;
  double gamma = 10.0;
  double alpha = 1.0;
  LossWeights weights = kHsPlusWeights;
  AreaTerm area = AreaTerm::kComplement;
  EmbedderKind embedder = EmbedderKind::kRandomConv;

  void validate() const;
};

nlohmann::json to_json(const MaskerConfig& c);
MaskerConfig masker_config_from_json(const nlohmann::json& j);

std::unique_ptr<SemanticEmbedder> make_embedder(EmbedderKind kind, int channels);

using EpochCallback = std::function<void(int epoch, double loss)>;

/// Each step: soft = soft_mask(H(X), gamma); X~ = perturb(X, soft, signs);
/// loss = hide_loss; gradients flow through the perturbation and the area
/// term into H.
ConvMasker train_masker(const std::vector<ImageTensor>& dataset, const MaskerConfig& config, Rng& rng,
                        const EpochCallback& on_epoch = {});

/// G: (canvas, visibility, query position) -> logits over the 256 levels of
/// each channel at the query.
class PixelPredictor {
 public:
  virtual ~PixelPredictor() = default;
  [[nodiscard]] virtual int channels() const = 0;
  /// `canvas` is unit_float; its hidden pixels are ignored.
  [[nodiscard]] virtual PixelLogits predict(const ImageTensor& canvas, const Mask& mask, Cell position) const = 0;
};

struct GeneratorArchitecture {
  int channels = 3;
  int context_radius = 3;  // (2r+1)^2 neighbourhood
  int hidden = 128;

  [[nodiscard]] int input_size() const noexcept;
};

/// MLP over the local neighbourhood (values and visibility bits), the mean
/// of all visible pixels, the hidden fraction and the normalised position.
class MlpPixelGenerator final : public PixelPredictor {
 public:
  MlpPixelGenerator(const GeneratorArchitecture& arch, std::uint64_t init_seed);

  [[nodiscard]] int channels() const override { return arch_.channels; }
  [[nodiscard]] const GeneratorArchitecture& architecture() const noexcept { return arch_; }
  [[nodiscard]] PixelLogits predict(const ImageTensor& canvas, const Mask& mask, Cell position) const override;

  [[nodiscard]] std::vector<double> context_features(const ImageTensor& canvas, const Mask& mask, Cell position) const;

  struct Trace {
    std::vector<double> input, pre1, act1, pre2, act2;
  };
  PixelLogits forward(std::span<const double> features, Trace& trace) const;
  void backward(const Trace& trace, const PixelLogits& grad_logits);

  nn::ParameterList parameters();

  std::uint64_t seed = 0;
  int epochs = 0;
  std::string dataset_id;
  std::vector<double> loss_history;
  nlohmann::json training_config = nlohmann::json::object();

 private:
  GeneratorArchitecture arch_;
  nn::Linear fc1_;
  nn::Linear fc2_;
  nn::Linear out_;
};

enum class ExtractorKind { kRandomConv, kIdentity };

/// Side of the window the perceptual training term is computed on.
inline constexpr int kPerceptualWindow = 16;

struct GeneratorConfig {
  GeneratorArchitecture architecture;  // channels are taken from the data
  int epochs = 10;
  int queries_per_image = 32;  // training samples per image per epoch
  int batch_size = 8;
  double learning_rate = 1e-3;
  double hidden_min = 0.1;  // hidden fraction drawn uniformly per sample
  double hidden_max = 0.9;
  LossWeights weights = kHsPlusWeights;
  ExtractorKind extractor = ExtractorKind::kRandomConv;

  void validate() const;
};

nlohmann::json to_json(const GeneratorConfig& c);
GeneratorConfig generator_config_from_json(const nlohmann::json& j);

std::unique_ptr<PerceptualExtractor> make_extractor(ExtractorKind kind, int channels);

/// Each sample: random pixel mask, one hidden query position, seek_loss of
/// the prediction. The perceptual term compares the image with the query
/// revealed against the image with the query filled by the expected level
/// under the predicted distribution, so that it is differentiable.
MlpPixelGenerator train_generator(const std::vector<ImageTensor>& dataset, const GeneratorConfig& config, Rng& rng,
                                  const EpochCallback& on_epoch = {});

/// How logits become a value.
struct DecodeMode {
  enum class Kind { kArgmax, kSample };
  Kind kind = Kind::kSample;
  double temperature = 1.0;
  std::uint64_t seed = 0;

  static DecodeMode argmax() { return {Kind::kArgmax, 1.0, 0}; }
  static DecodeMode sample(double temperature, std::uint64_t seed) { return {Kind::kSample, temperature, seed}; }
  void validate() const;
};

nlohmann::json to_json(const DecodeMode& m);
DecodeMode decode_mode_from_json(const nlohmann::json& j);

struct Decoded {
  ImageTensor image;
  Mask mask;
  std::vector<int> levels;  // decoded level per channel
};

/// Writes the decoded levels at `position` (in the canvas's domain) and marks
/// it visible. `rng` is used only in sample mode.
Decoded enc(const ImageTensor& masked, const Mask& mask, const PixelLogits& logits, Cell position,
            const DecodeMode& mode, Rng& rng);

enum class OrderVariant { kOriginal, kInverse, kRandom };

std::string_view to_string(OrderVariant v);
OrderVariant order_variant_from_string(std::string_view s);

struct HsPlusOptions {
  double gamma = 10.0;
  double threshold = 0.5;
  OrderVariant order = OrderVariant::kOriginal;
  std::uint64_t order_seed = 0;  // random order only
  std::size_t max_hidden = 4096;
  std::optional<std::size_t> hidden_budget;  // see limit_hidden
};

struct DecodeStep {
  Cell position;
  double score = 0.0;
  std::vector<int> levels;
};

struct AttackReport {
  std::size_t hidden_count = 0;
  std::vector<std::size_t> score_histogram;  // ten equal bins over [0, 1]
  std::string order_hash;
  std::string order;
};

nlohmann::json to_json(const AttackReport& r);

struct HsPlusAttackResult {
  ImageTensor purged;
  Mask mask;
  RealMap scores;
  std::vector<DecodeStep> steps;
  AttackReport report;
};

/// Hardens sigmoid(gamma * H(image)) and reconstructs every hidden pixel in
/// the chosen order. An explicit mask overrides the hardened one (used to
/// compare orders on identical masks).
HsPlusAttackResult attack_hsplus_detailed(const MaskingModel& masker, const PixelPredictor& generator,
                                          const ImageTensor& image, const HsPlusOptions& options,
                                          const DecodeMode& mode, const Mask* mask_override = nullptr);

ImageTensor attack_hsplus(const MaskingModel& masker, const PixelPredictor& generator, const ImageTensor& image,
                          double gamma, const DecodeMode& mode);

inline constexpr const char* kMaskerModelKind = "hsplus-masker";
inline constexpr const char* kGeneratorModelKind = "hsplus-generator";

void save_masker(const std::filesystem::path& path, ConvMasker& model, int width, int height);
ConvMasker load_masker(const std::filesystem::path& path);
void save_generator(const std::filesystem::path& path, MlpPixelGenerator& model, int width, int height);
MlpPixelGenerator load_generator(const std::filesystem::path& path);

}  // namespace hideseek
