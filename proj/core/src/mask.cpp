#include "hideseek/mask.hpp"

#include <algorithm>
#include <opencv2/imgcodecs.hpp>

#include "hideseek/error.hpp"

namespace hideseek {

PatchGrid::PatchGrid(int image_width, int image_height, int patch_size) : patch_size_(patch_size) {
  if (patch_size < 1 || image_width < 1 || image_height < 1) {
    fail(ErrorCode::kInvalidArgument, "patch grid needs positive sizes");
  }
  if (image_width % patch_size != 0 || image_height % patch_size != 0) {
    fail(ErrorCode::kShapeMismatch, "patch size must divide the image dimensions",
         std::to_string(image_width) + "x" + std::to_string(image_height) + " / " +
             std::to_string(patch_size));
  }
  cols_ = image_width / patch_size;
  rows_ = image_height / patch_size;
}

std::vector<std::size_t> PatchGrid::neighbours(std::size_t index) const {
  const Cell c = cell(index);
  std::vector<std::size_t> out;
  out.reserve(4);
  if (c.x > 0) out.push_back(index - 1);
  if (c.x + 1 < cols_) out.push_back(index + 1);
  if (c.y > 0) out.push_back(index - cols_);
  if (c.y + 1 < rows_) out.push_back(index + cols_);
  return out;
}

Mask::Mask(int cols, int rows, int cell_size, std::uint8_t fill)
    : cols_(cols), rows_(rows), cell_size_(cell_size) {
  if (cols < 1 || rows < 1 || cell_size < 1) fail(ErrorCode::kInvalidArgument, "mask needs positive sizes");
  values_.assign(static_cast<std::size_t>(cols) * rows, fill ? 1 : 0);
}

Mask Mask::for_grid(const PatchGrid& grid, std::uint8_t fill) {
  return Mask(grid.cols(), grid.rows(), grid.patch_size(), fill);
}

std::size_t Mask::hidden_count() const noexcept {
  return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), std::uint8_t{0}));
}

std::vector<Cell> Mask::hidden_cells() const {
  std::vector<Cell> out;
  for (int y = 0; y < rows_; ++y)
    for (int x = 0; x < cols_; ++x)
      if (!visible(x, y)) out.push_back({x, y});
  return out;
}

SoftMask::SoftMask(int width, int height, double fill) : map_(width, height, fill) {}

SoftMask::SoftMask(RealMap values) : map_(std::move(values)) {
  for (double v : map_.values) {
    if (!(v >= 0.0 && v <= 1.0)) fail(ErrorCode::kOutOfRange, "soft mask value outside [0, 1]");
  }
}

double SoftMask::energy() const noexcept {
  double s = 0.0;
  for (double v : map_.values) s += v * v;
  return s;
}

ImageTensor apply_mask(const ImageTensor& image, const Mask& mask) {
  if (mask.pixel_width() != image.width() || mask.pixel_height() != image.height()) {
    fail(ErrorCode::kShapeMismatch, "mask extent does not match image");
  }
  ImageTensor out = image;
  for (int c = 0; c < image.channels(); ++c)
    for (int y = 0; y < image.height(); ++y)
      for (int x = 0; x < image.width(); ++x)
        if (!mask.pixel_visible(x, y)) out.at(c, x, y) = 0.0;
  return out;
}

nlohmann::json mask_to_json(const Mask& mask) {
  nlohmann::json hidden = nlohmann::json::array();
  for (const Cell& c : mask.hidden_cells()) hidden.push_back({c.x, c.y});
  return {{"cols", mask.cols()},
          {"rows", mask.rows()},
          {"cell_size", mask.cell_size()},
          {"hidden", std::move(hidden)}};
}

Mask mask_from_json(const nlohmann::json& j) {
  try {
    Mask mask(j.at("cols").get<int>(), j.at("rows").get<int>(), j.at("cell_size").get<int>());
    for (const auto& xy : j.at("hidden")) {
      const int x = xy.at(0).get<int>();
      const int y = xy.at(1).get<int>();
      if (x < 0 || y < 0 || x >= mask.cols() || y >= mask.rows()) {
        fail(ErrorCode::kCorruptData, "mask coordinate out of range");
      }
      mask.set(x, y, false);
    }
    return mask;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kCorruptData, std::string("malformed mask JSON: ") + e.what());
  }
}

void save_mask_png(const std::filesystem::path& path, const Mask& mask) {
  cv::Mat mat(mask.pixel_height(), mask.pixel_width(), CV_8UC1);
  for (int y = 0; y < mat.rows; ++y)
    for (int x = 0; x < mat.cols; ++x) mat.at<unsigned char>(y, x) = mask.pixel_visible(x, y) ? 255 : 0;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::vector<int> params = {cv::IMWRITE_PNG_BILEVEL, 1};
  if (!cv::imwrite(path.string(), mat, params)) fail(ErrorCode::kIo, "failed to write mask PNG", path.string());
}

}  // namespace hideseek
