#include "hideseek/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <opencv2/imgcodecs.hpp>

#include "hideseek/error.hpp"

namespace hideseek {

std::string_view to_string(ValueDomain domain) {
  return domain == ValueDomain::kU8 ? "u8" : "unit_float";
}

ImageTensor::ImageTensor(int channels, int width, int height, ValueDomain domain, double fill)
    : channels_(channels), width_(width), height_(height), domain_(domain) {
  if (channels < 1 || width < 1 || height < 1) {
    fail(ErrorCode::kInvalidArgument, "image dimensions must be positive",
         std::to_string(channels) + "x" + std::to_string(width) + "x" + std::to_string(height));
  }
  values_.assign(static_cast<std::size_t>(channels) * pixel_count(), fill);
}

std::span<double> ImageTensor::channel(int c) noexcept {
  return std::span<double>(values_).subspan(static_cast<std::size_t>(c) * pixel_count(), pixel_count());
}

std::span<const double> ImageTensor::channel(int c) const noexcept {
  return std::span<const double>(values_).subspan(static_cast<std::size_t>(c) * pixel_count(),
                                                  pixel_count());
}

int quantize_level(double unit_value) noexcept {
  const double v = std::clamp(unit_value, 0.0, 1.0) * 255.0;
  return static_cast<int>(std::lround(v));
}

ImageTensor ImageTensor::to_domain(ValueDomain target) const {
  ImageTensor out = *this;
  out.domain_ = target;
  if (target == domain_) return out;
  if (target == ValueDomain::kUnitFloat) {
    for (double& v : out.values_) v /= 255.0;
  } else {
    for (double& v : out.values_) v = quantize_level(v);
  }
  return out;
}

void ImageTensor::validate() const {
  const double hi = domain_ == ValueDomain::kU8 ? 255.0 : 1.0;
  for (double v : values_) {
    if (!(v >= 0.0 && v <= hi)) fail(ErrorCode::kOutOfRange, "image value outside its domain");
    if (domain_ == ValueDomain::kU8 && v != std::floor(v)) {
      fail(ErrorCode::kOutOfRange, "u8 image holds a non-integer value");
    }
  }
}

void ImageTensor::clamp_to_domain() noexcept {
  const double hi = domain_ == ValueDomain::kU8 ? 255.0 : 1.0;
  for (double& v : values_) v = std::clamp(v, 0.0, hi);
}

namespace {

bool has_png_signature(const std::filesystem::path& path) {
  static constexpr unsigned char kSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::ifstream in(path, std::ios::binary);
  unsigned char head[8] = {};
  in.read(reinterpret_cast<char*>(head), 8);
  return in.gcount() == 8 && std::equal(std::begin(head), std::end(head), std::begin(kSig));
}

}  // namespace

ImageTensor load_image(const std::filesystem::path& path, ValueDomain domain) {
  if (!std::filesystem::is_regular_file(path)) {
    fail(ErrorCode::kMissingFile, "image file not found", path.string());
  }
  if (!has_png_signature(path)) {
    fail(ErrorCode::kUnsupportedFormat, "only PNG images are supported", path.string());
  }
  const cv::Mat mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (mat.empty()) fail(ErrorCode::kCorruptData, "could not decode PNG", path.string());
  if (mat.depth() != CV_8U || (mat.channels() != 1 && mat.channels() != 3)) {
    fail(ErrorCode::kUnsupportedFormat, "expected 8-bit grey or RGB PNG", path.string());
  }

  const int channels = mat.channels();
  ImageTensor image(channels, mat.cols, mat.rows, ValueDomain::kU8);
  for (int y = 0; y < mat.rows; ++y) {
    const auto* row = mat.ptr<unsigned char>(y);
    for (int x = 0; x < mat.cols; ++x) {
      for (int c = 0; c < channels; ++c) {
        // OpenCV stores BGR.
        const int src = channels == 3 ? 2 - c : c;
        image.at(c, x, y) = row[x * channels + src];
      }
    }
  }
  return image.to_domain(domain);
}

void save_image(const std::filesystem::path& path, const ImageTensor& image) {
  if (image.channels() != 1 && image.channels() != 3) {
    fail(ErrorCode::kUnsupportedFormat, "PNG output needs 1 or 3 channels", path.string());
  }
  const ImageTensor u8 = image.to_u8();
  const int channels = u8.channels();
  cv::Mat mat(u8.height(), u8.width(), channels == 3 ? CV_8UC3 : CV_8UC1);
  for (int y = 0; y < u8.height(); ++y) {
    auto* row = mat.ptr<unsigned char>(y);
    for (int x = 0; x < u8.width(); ++x) {
      for (int c = 0; c < channels; ++c) {
        const int dst = channels == 3 ? 2 - c : c;
        row[x * channels + dst] = static_cast<unsigned char>(u8.at(c, x, y));
      }
    }
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), mat)) fail(ErrorCode::kIo, "failed to write PNG", path.string());
}

ImageTensor luminance(const ImageTensor& image) {
  if (image.channels() != 3) {
    ImageTensor out(1, image.width(), image.height(), image.domain());
    std::copy(image.channel(0).begin(), image.channel(0).end(), out.values().begin());
    return out;
  }
  ImageTensor out(1, image.width(), image.height(), ValueDomain::kUnitFloat);
  const ImageTensor unit = image.to_unit();
  auto r = unit.channel(0), g = unit.channel(1), b = unit.channel(2);
  auto y = out.values();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
  return image.domain() == ValueDomain::kU8 ? out.to_u8() : out;
}

}  // namespace hideseek
