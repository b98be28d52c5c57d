#pragma once

#include <string>
#include <string_view>

#include "hideseek/image.hpp"

namespace hideseek {

enum class ManipulationKind { kCenterCrop, kJpeg, kQuantize, kGaussianBlur, kGuidedBlur };

/// One benign image manipulation with its parameters. Only the fields of the
/// chosen kind are read.
struct Manipulation {
  ManipulationKind kind = ManipulationKind::kJpeg;
  double crop_ratio = 1.0;  // (0, 1]
  int quality = 75;         // [1, 100]
  int levels = 256;         // [2, 256]
  double sigma = 1.0;       // > 0
  int radius = 1;           // >= 1
  double eps = 0.01;        // > 0, in unit-intensity squared

  static Manipulation center_crop(double ratio);
  static Manipulation jpeg(int quality);
  static Manipulation quantize(int levels);
  static Manipulation gaussian_blur(double sigma);
  static Manipulation guided_blur(int radius, double eps);

  /// Parses "crop:0.8", "jpeg:80", "quantize:8", "blur:2", "guided:4:0.01".
  static Manipulation parse(std::string_view spec);
  [[nodiscard]] std::string label() const;

  /// Throws kOutOfRange for parameters outside the documented ranges.
  void validate() const;
};

/// Applies the manipulation in 8-bit space. The result has the input's shape
/// and is returned in the u8 domain.
///  - center_crop keeps the central ratio * (w, h) and resizes back
///    bilinearly (a full-size crop is returned untouched);
///  - jpeg is an encode/decode round-trip at the given quality;
///  - quantize maps v to round(round(v (k-1) / 255) * 255 / (k-1));
///  - gaussian_blur uses a (2 ceil(3 sigma) + 1)-wide kernel;
///  - guided_blur is the guided filter with the image as its own guide.
ImageTensor manipulate(const ImageTensor& image, const Manipulation& m);

}  // namespace hideseek
