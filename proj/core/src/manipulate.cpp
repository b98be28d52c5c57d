#include "hideseek/manipulate.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <opencv2/ximgproc.hpp>
#include <vector>

#include "cv_bridge.hpp"
#include "hideseek/error.hpp"

namespace hideseek {

namespace detail {

cv::Mat to_mat_u8(const ImageTensor& image) {
  const ImageTensor u8 = image.to_u8();
  const int ch = u8.channels();
  cv::Mat mat(u8.height(), u8.width(), CV_8UC(ch));
  for (int y = 0; y < u8.height(); ++y) {
    auto* row = mat.ptr<unsigned char>(y);
    for (int x = 0; x < u8.width(); ++x)
      for (int c = 0; c < ch; ++c) row[x * ch + (ch == 3 ? 2 - c : c)] = static_cast<unsigned char>(u8.at(c, x, y));
  }
  return mat;
}

cv::Mat to_mat_unit(const ImageTensor& image) {
  const ImageTensor unit = image.to_unit();
  const int ch = unit.channels();
  cv::Mat mat(unit.height(), unit.width(), CV_32FC(ch));
  for (int y = 0; y < unit.height(); ++y) {
    auto* row = mat.ptr<float>(y);
    for (int x = 0; x < unit.width(); ++x)
      for (int c = 0; c < ch; ++c) row[x * ch + (ch == 3 ? 2 - c : c)] = static_cast<float>(unit.at(c, x, y));
  }
  return mat;
}

ImageTensor from_mat_u8(const cv::Mat& mat) {
  const int ch = mat.channels();
  ImageTensor out(ch, mat.cols, mat.rows, ValueDomain::kU8);
  for (int y = 0; y < mat.rows; ++y) {
    const auto* row = mat.ptr<unsigned char>(y);
    for (int x = 0; x < mat.cols; ++x)
      for (int c = 0; c < ch; ++c) out.at(c, x, y) = row[x * ch + (ch == 3 ? 2 - c : c)];
  }
  return out;
}

ImageTensor from_mat_unit(const cv::Mat& mat) {
  const int ch = mat.channels();
  ImageTensor out(ch, mat.cols, mat.rows, ValueDomain::kUnitFloat);
  for (int y = 0; y < mat.rows; ++y) {
    const auto* row = mat.ptr<float>(y);
    for (int x = 0; x < mat.cols; ++x)
      for (int c = 0; c < ch; ++c) out.at(c, x, y) = row[x * ch + (ch == 3 ? 2 - c : c)];
  }
  return out.to_u8();
}

}  // namespace detail

Manipulation Manipulation::center_crop(double ratio) {
  Manipulation m;
  m.kind = ManipulationKind::kCenterCrop;
  m.crop_ratio = ratio;
  return m;
}

Manipulation Manipulation::jpeg(int quality) {
  Manipulation m;
  m.kind = ManipulationKind::kJpeg;
  m.quality = quality;
  return m;
}

Manipulation Manipulation::quantize(int levels) {
  Manipulation m;
  m.kind = ManipulationKind::kQuantize;
  m.levels = levels;
  return m;
}

Manipulation Manipulation::gaussian_blur(double sigma) {
  Manipulation m;
  m.kind = ManipulationKind::kGaussianBlur;
  m.sigma = sigma;
  return m;
}

Manipulation Manipulation::guided_blur(int radius, double eps) {
  Manipulation m;
  m.kind = ManipulationKind::kGuidedBlur;
  m.radius = radius;
  m.eps = eps;
  return m;
}

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double to_double(std::string_view s, std::string_view spec) {
  try {
    std::size_t used = 0;
    const std::string str(s);
    const double v = std::stod(str, &used);
    if (used != str.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::kInvalidArgument, "bad manipulation parameter", std::string(spec));
  }
}

int to_int(std::string_view s, std::string_view spec) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorCode::kInvalidArgument, "bad manipulation parameter", std::string(spec));
  }
  return v;
}

}  // namespace

Manipulation Manipulation::parse(std::string_view spec) {
  const auto parts = split(spec, ':');
  const auto name = parts.front();
  auto need = [&](std::size_t n) {
    if (parts.size() != n + 1) fail(ErrorCode::kInvalidArgument, "wrong parameter count", std::string(spec));
  };
  Manipulation m;
  if (name == "crop") {
    need(1);
    m = center_crop(to_double(parts[1], spec));
  } else if (name == "jpeg") {
    need(1);
    m = jpeg(to_int(parts[1], spec));
  } else if (name == "quantize") {
    need(1);
    m = quantize(to_int(parts[1], spec));
  } else if (name == "blur") {
    need(1);
    m = gaussian_blur(to_double(parts[1], spec));
  } else if (name == "guided") {
    need(2);
    m = guided_blur(to_int(parts[1], spec), to_double(parts[2], spec));
  } else {
    fail(ErrorCode::kInvalidArgument, "unknown manipulation", std::string(spec));
  }
  m.validate();
  return m;
}

std::string Manipulation::label() const {
  // Shortest round-trip formatting, so label() parses back to the same value.
  const auto num = [](double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  };
  switch (kind) {
    case ManipulationKind::kCenterCrop: return "crop:" + num(crop_ratio);
    case ManipulationKind::kJpeg: return "jpeg:" + std::to_string(quality);
    case ManipulationKind::kQuantize: return "quantize:" + std::to_string(levels);
    case ManipulationKind::kGaussianBlur: return "blur:" + num(sigma);
    case ManipulationKind::kGuidedBlur: return "guided:" + std::to_string(radius) + ":" + num(eps);
  }
  return {};
}

void Manipulation::validate() const {
  switch (kind) {
    case ManipulationKind::kCenterCrop:
      if (!(crop_ratio > 0.0 && crop_ratio <= 1.0)) fail(ErrorCode::kOutOfRange, "crop ratio must lie in (0, 1]");
      break;
    case ManipulationKind::kJpeg:
      if (quality < 1 || quality > 100) fail(ErrorCode::kOutOfRange, "JPEG quality must lie in [1, 100]");
      break;
    case ManipulationKind::kQuantize:
      if (levels < 2 || levels > 256) fail(ErrorCode::kOutOfRange, "quantization levels must lie in [2, 256]");
      break;
    case ManipulationKind::kGaussianBlur:
      if (!(sigma > 0.0)) fail(ErrorCode::kOutOfRange, "blur sigma must be positive");
      break;
    case ManipulationKind::kGuidedBlur:
      if (radius < 1 || !(eps > 0.0)) fail(ErrorCode::kOutOfRange, "guided blur needs radius >= 1 and eps > 0");
      break;
  }
}

ImageTensor manipulate(const ImageTensor& image, const Manipulation& m) {
  m.validate();
  switch (m.kind) {
    case ManipulationKind::kCenterCrop: {
      const int cw = std::max(1, static_cast<int>(std::lround(m.crop_ratio * image.width())));
      const int ch = std::max(1, static_cast<int>(std::lround(m.crop_ratio * image.height())));
      if (cw == image.width() && ch == image.height()) return image.to_u8();
      const cv::Mat src = detail::to_mat_u8(image);
      const cv::Rect roi((image.width() - cw) / 2, (image.height() - ch) / 2, cw, ch);
      cv::Mat out;
      cv::resize(src(roi), out, cv::Size(image.width(), image.height()), 0, 0, cv::INTER_LINEAR);
      return detail::from_mat_u8(out);
    }
    case ManipulationKind::kJpeg: {
      std::vector<unsigned char> buf;
      const std::vector<int> params = {cv::IMWRITE_JPEG_QUALITY, m.quality};
      if (!cv::imencode(".jpg", detail::to_mat_u8(image), buf, params)) {
        fail(ErrorCode::kIo, "JPEG encoding failed");
      }
      const cv::Mat decoded = cv::imdecode(buf, image.channels() == 1 ? cv::IMREAD_GRAYSCALE : cv::IMREAD_COLOR);
      if (decoded.empty()) fail(ErrorCode::kCorruptData, "JPEG decoding failed");
      return detail::from_mat_u8(decoded);
    }
    case ManipulationKind::kQuantize: {
      ImageTensor out = image.to_u8();
      const double k1 = m.levels - 1;
      for (double& v : out.values()) v = std::round(std::round(v * k1 / 255.0) * 255.0 / k1);
      return out;
    }
    case ManipulationKind::kGaussianBlur: {
      const int half = static_cast<int>(std::ceil(3.0 * m.sigma));
      cv::Mat out;
      cv::GaussianBlur(detail::to_mat_unit(image), out, cv::Size(2 * half + 1, 2 * half + 1), m.sigma, m.sigma,
                       cv::BORDER_REFLECT101);
      return detail::from_mat_unit(out);
    }
    case ManipulationKind::kGuidedBlur: {
      const cv::Mat src = detail::to_mat_unit(image);
      cv::Mat out;
      cv::ximgproc::guidedFilter(src, src, out, m.radius, m.eps);
      return detail::from_mat_unit(out);
    }
  }
  fail(ErrorCode::kInvalidArgument, "unknown manipulation");
}

}  // namespace hideseek
