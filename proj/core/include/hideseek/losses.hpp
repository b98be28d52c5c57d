#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "hideseek/features.hpp"
#include "hideseek/image.hpp"
#include "hideseek/mask.hpp"
#include "hideseek/rng.hpp"

namespace hideseek {

/// Weights of the HIDE objective (area, frequency, semantic) and the SEEK
/// objective (pixel, perceptual). All must be non-negative.
struct LossWeights {
  double area = 1.0;
  double frequency = 1.0;
  double semantic = 1.0;
  double pixel = 1.0;
  double perceptual = 1.0;

  void validate() const;
};

/// Which form of the area term the HIDE loss uses.
enum class AreaTerm {
  kComplement,  // lambda1 * (w h - ||M||^2): rewards perturbing many pixels
  kEnergy,      // lambda1 * ||M||^2: the variant printed in the training listing
};

struct HsnLoss {
  double value = 0.0;
  bool no_hidden = false;  // set when the mask hides nothing; value is then 0
};

/// Mean squared error over hidden pixels (all channels) only.
HsnLoss hsn_loss(const ImageTensor& x, const ImageTensor& x_hat, const Mask& mask);

/// ||embed(x) - embed(x_tilde)||^2.
double semantic_loss(const ImageTensor& x, const ImageTensor& x_tilde, const SemanticEmbedder& embedder);
/// d semantic_loss / d x_tilde.
ImageTensor semantic_loss_grad(const ImageTensor& x, const ImageTensor& x_tilde, const SemanticEmbedder& embedder);

/// Smallest pixel modification: one u8 level.
inline constexpr double kPerturbationStep = 1.0 / 255.0;

/// Per channel-pixel signs in {-1, +1}.
struct PerturbationSigns {
  int channels = 0;
  int width = 0;
  int height = 0;
  std::vector<std::int8_t> signs;  // same layout as ImageTensor

  static PerturbationSigns draw(int channels, int width, int height, Rng& rng);
};

/// clamp(x + soft * sign / 255) in the unit_float domain.
ImageTensor perturb(const ImageTensor& x, const SoftMask& soft, const PerturbationSigns& signs);
ImageTensor perturb_with_soft_mask(const ImageTensor& x, const SoftMask& soft, Rng& rng);

struct HideLossTerms {
  double area = 0.0;
  double frequency = 0.0;
  double semantic = 0.0;
  double total = 0.0;  // weighted sum
};

HideLossTerms hide_loss(const SoftMask& soft, const ImageTensor& x, const ImageTensor& x_tilde,
                        const LossWeights& weights, const SemanticEmbedder& embedder, double alpha = 1.0,
                        AreaTerm area = AreaTerm::kComplement);

struct HideLossGrad {
  HideLossTerms terms;
  RealMap grad_soft;  // d total / d soft, through the area term and x_tilde
};

/// Evaluates the HIDE loss at x_tilde = perturb(x, soft, signs) and its
/// gradient with respect to the soft mask. The spectrum weight is held
/// constant, and clamped channel-pixels pass no gradient.
HideLossGrad hide_loss_with_grad(const SoftMask& soft, const ImageTensor& x, const PerturbationSigns& signs,
                                 const LossWeights& weights, const SemanticEmbedder& embedder,
                                 double alpha = 1.0, AreaTerm area = AreaTerm::kComplement);

/// Unnormalised scores over the 256 levels of each channel of one pixel.
class PixelLogits {
 public:
  static constexpr int kLevels = 256;

  PixelLogits() = default;
  explicit PixelLogits(int channels, double fill = 0.0);

  [[nodiscard]] int channels() const noexcept { return channels_; }
  double& at(int c, int level) noexcept { return values_[static_cast<std::size_t>(c) * kLevels + level]; }
  [[nodiscard]] double at(int c, int level) const noexcept {
    return values_[static_cast<std::size_t>(c) * kLevels + level];
  }
  std::span<double> channel(int c) noexcept {
    return std::span<double>(values_).subspan(static_cast<std::size_t>(c) * kLevels, kLevels);
  }
  [[nodiscard]] std::span<const double> channel(int c) const noexcept {
    return std::span<const double>(values_).subspan(static_cast<std::size_t>(c) * kLevels, kLevels);
  }
  std::vector<double>& values() noexcept { return values_; }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }

  /// Softmax probabilities of one channel.
  [[nodiscard]] std::vector<double> probabilities(int c, double temperature = 1.0) const;

 private:
  int channels_ = 0;
  std::vector<double> values_;
};

/// Per-channel categorical cross-entropy at the target levels, summed over
/// channels. Throws kOutOfRange for targets outside [0, 255].
double pixel_loss(const PixelLogits& logits, std::span<const int> target);
/// d pixel_loss / d logits (softmax minus one-hot).
PixelLogits pixel_loss_grad(const PixelLogits& logits, std::span<const int> target);

/// ||extract(x) - extract(x_bar)||^2.
double perceptual_loss(const ImageTensor& x, const ImageTensor& x_bar, const PerceptualExtractor& extractor);
/// d perceptual_loss / d x_bar.
ImageTensor perceptual_loss_grad(const ImageTensor& x, const ImageTensor& x_bar,
                                 const PerceptualExtractor& extractor);

struct SeekLossTerms {
  double pixel = 0.0;
  double perceptual = 0.0;
  double total = 0.0;
};

SeekLossTerms seek_loss(const PixelLogits& logits, std::span<const int> target, const ImageTensor& x_prev_true,
                        const ImageTensor& x_prev_pred, const LossWeights& weights,
                        const PerceptualExtractor& extractor);

}  // namespace hideseek
