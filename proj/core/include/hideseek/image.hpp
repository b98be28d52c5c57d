#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace hideseek {

enum class ValueDomain {
  kU8,        // integers in [0, 255]
  kUnitFloat  // reals in [0, 1]
};

std::string_view to_string(ValueDomain domain);

/// C x w x h image. Values are stored as doubles in channel-major, row-major
/// order: index = (c * height + y) * width + x.
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(int channels, int width, int height, ValueDomain domain = ValueDomain::kUnitFloat,
              double fill = 0.0);

  [[nodiscard]] int channels() const noexcept { return channels_; }
  [[nodiscard]] int width() const noexcept { return width_; }
  [[nodiscard]] int height() const noexcept { return height_; }
  [[nodiscard]] std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] bool empty() const noexcept { return values_.empty(); }
  [[nodiscard]] ValueDomain domain() const noexcept { return domain_; }

  [[nodiscard]] std::size_t offset(int c, int x, int y) const noexcept {
    return (static_cast<std::size_t>(c) * static_cast<std::size_t>(height_) +
            static_cast<std::size_t>(y)) *
               static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }
  double& at(int c, int x, int y) noexcept { return values_[offset(c, x, y)]; }
  [[nodiscard]] double at(int c, int x, int y) const noexcept { return values_[offset(c, x, y)]; }

  std::span<double> values() noexcept { return values_; }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  std::span<double> channel(int c) noexcept;
  [[nodiscard]] std::span<const double> channel(int c) const noexcept;

  [[nodiscard]] bool same_shape(const ImageTensor& other) const noexcept {
    return channels_ == other.channels_ && width_ == other.width_ && height_ == other.height_;
  }

  /// u8 -> unit_float is v / 255 exactly; unit_float -> u8 rounds to the
  /// nearest level after clamping.
  [[nodiscard]] ImageTensor to_domain(ValueDomain target) const;
  [[nodiscard]] ImageTensor to_unit() const { return to_domain(ValueDomain::kUnitFloat); }
  [[nodiscard]] ImageTensor to_u8() const { return to_domain(ValueDomain::kU8); }

  /// Throws kOutOfRange if any value violates the declared domain.
  void validate() const;
  void clamp_to_domain() noexcept;

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  int channels_ = 0;
  int width_ = 0;
  int height_ = 0;
  ValueDomain domain_ = ValueDomain::kUnitFloat;
  std::vector<double> values_;
};

/// Real-valued w x h map (masker logits, scores, spectrum weights).
struct RealMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  RealMap() = default;
  RealMap(int w, int h, double fill = 0.0)
      : width(w), height(h), values(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  double& at(int x, int y) noexcept { return values[static_cast<std::size_t>(y) * width + x]; }
  [[nodiscard]] double at(int x, int y) const noexcept {
    return values[static_cast<std::size_t>(y) * width + x];
  }
};

/// Quantizes a unit value to the nearest u8 level.
int quantize_level(double unit_value) noexcept;

ImageTensor load_image(const std::filesystem::path& path, ValueDomain domain);
/// Writes an 8-bit PNG (grey or RGB); unit_float images are quantized first.
void save_image(const std::filesystem::path& path, const ImageTensor& image);

/// ITU-R BT.601 luma of a 3-channel image (the single channel otherwise),
/// in the image's domain.
ImageTensor luminance(const ImageTensor& image);

}  // namespace hideseek
