#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hideseek/image.hpp"
#include "hideseek/nn.hpp"

namespace hideseek {

/// Deterministic image -> vector map with a vector-Jacobian product, so that
/// losses built on it can be differentiated with respect to the image.
class FeatureModel {
 public:
  virtual ~FeatureModel() = default;

  /// Stable identifier recorded in reports; numbers from different ids are
  /// not comparable.
  [[nodiscard]] virtual std::string id() const = 0;
  [[nodiscard]] virtual std::vector<double> features(const ImageTensor& image) const = 0;
  /// Gradient of <grad, features(image)> with respect to the unit_float image.
  [[nodiscard]] virtual ImageTensor features_vjp(const ImageTensor& image, std::span<const double> grad) const = 0;
};

/// Stand-in for an image-text embedding model. Any embedding backend can be
/// plugged in by implementing this interface.
class SemanticEmbedder : public FeatureModel {};

/// Stand-in for a pretrained perceptual backbone; exposes per-layer
/// activations for the learned-perceptual distance.
class PerceptualExtractor : public FeatureModel {
 public:
  [[nodiscard]] virtual std::vector<nn::FeatureMap> layers(const ImageTensor& image) const = 0;
};

/// Flattened pixels.
class IdentityEmbedder final : public SemanticEmbedder {
 public:
  [[nodiscard]] std::string id() const override { return "identity"; }
  [[nodiscard]] std::vector<double> features(const ImageTensor& image) const override;
  [[nodiscard]] ImageTensor features_vjp(const ImageTensor& image, std::span<const double> grad) const override;
};

/// Flattened pixels, exposed as a single layer.
class IdentityExtractor final : public PerceptualExtractor {
 public:
  [[nodiscard]] std::string id() const override { return "identity"; }
  [[nodiscard]] std::vector<double> features(const ImageTensor& image) const override;
  [[nodiscard]] ImageTensor features_vjp(const ImageTensor& image, std::span<const double> grad) const override;
  [[nodiscard]] std::vector<nn::FeatureMap> layers(const ImageTensor& image) const override;
};

/// Two strided 3x3 conv+ReLU stages, global average pooling and a linear
/// projection, with weights drawn from a fixed seed.
class RandomConvEmbedder final : public SemanticEmbedder {
 public:
  explicit RandomConvEmbedder(int channels = 3, std::uint64_t seed = 0x5eed0001, int dims = 64);

  [[nodiscard]] std::string id() const override;
  [[nodiscard]] std::vector<double> features(const ImageTensor& image) const override;
  [[nodiscard]] ImageTensor features_vjp(const ImageTensor& image, std::span<const double> grad) const override;

 private:
  std::uint64_t seed_;
  nn::Conv2d conv1_;
  nn::Conv2d conv2_;
  nn::Linear proj_;
};

/// Three 3x3 conv+ReLU stages (stride 1, 2, 2) with fixed-seed weights; the
/// three activations are the layers, their concatenation the feature vector.
class RandomConvExtractor final : public PerceptualExtractor {
 public:
  explicit RandomConvExtractor(int channels = 3, std::uint64_t seed = 0x5eed0002);

  [[nodiscard]] std::string id() const override;
  [[nodiscard]] std::vector<double> features(const ImageTensor& image) const override;
  [[nodiscard]] ImageTensor features_vjp(const ImageTensor& image, std::span<const double> grad) const override;
  [[nodiscard]] std::vector<nn::FeatureMap> layers(const ImageTensor& image) const override;

 private:
  std::uint64_t seed_;
  std::vector<nn::Conv2d> convs_;
};

}  // namespace hideseek
