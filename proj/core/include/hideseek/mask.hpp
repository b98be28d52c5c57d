#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <vector>

#include "hideseek/image.hpp"

namespace hideseek {

struct Cell {
  int x = 0;  // column
  int y = 0;  // row
  friend bool operator==(const Cell&, const Cell&) = default;
};

/// Square patches tiling a w x h image. The patch size must divide both
/// dimensions; images that do not tile are rejected rather than padded.
class PatchGrid {
 public:
  PatchGrid(int image_width, int image_height, int patch_size);

  [[nodiscard]] int patch_size() const noexcept { return patch_size_; }
  [[nodiscard]] int cols() const noexcept { return cols_; }
  [[nodiscard]] int rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cell_count() const noexcept {
    return static_cast<std::size_t>(cols_) * static_cast<std::size_t>(rows_);
  }
  [[nodiscard]] std::size_t index(Cell c) const noexcept {
    return static_cast<std::size_t>(c.y) * cols_ + c.x;
  }
  [[nodiscard]] Cell cell(std::size_t index) const noexcept {
    return {static_cast<int>(index % cols_), static_cast<int>(index / cols_)};
  }
  /// 4-neighbourhood, in the fixed order left, right, up, down.
  [[nodiscard]] std::vector<std::size_t> neighbours(std::size_t index) const;

 private:
  int patch_size_;
  int cols_;
  int rows_;
};

/// Hard visibility map over cells: 1 = visible/kept, 0 = hidden. Cells are
/// single pixels when cell_size is 1, otherwise square patches.
class Mask {
 public:
  Mask() = default;
  Mask(int cols, int rows, int cell_size = 1, std::uint8_t fill = 1);
  static Mask for_grid(const PatchGrid& grid, std::uint8_t fill = 1);

  [[nodiscard]] int cols() const noexcept { return cols_; }
  [[nodiscard]] int rows() const noexcept { return rows_; }
  [[nodiscard]] int cell_size() const noexcept { return cell_size_; }
  [[nodiscard]] bool pixel_granularity() const noexcept { return cell_size_ == 1; }
  [[nodiscard]] int pixel_width() const noexcept { return cols_ * cell_size_; }
  [[nodiscard]] int pixel_height() const noexcept { return rows_ * cell_size_; }
  [[nodiscard]] std::size_t cell_count() const noexcept { return values_.size(); }

  [[nodiscard]] bool visible(int x, int y) const noexcept {
    return values_[static_cast<std::size_t>(y) * cols_ + x] != 0;
  }
  [[nodiscard]] bool visible(Cell c) const noexcept { return visible(c.x, c.y); }
  void set(int x, int y, bool visible) noexcept {
    values_[static_cast<std::size_t>(y) * cols_ + x] = visible ? 1 : 0;
  }
  void set(Cell c, bool visible) noexcept { set(c.x, c.y, visible); }
  /// Visibility of the cell containing pixel (px, py).
  [[nodiscard]] bool pixel_visible(int px, int py) const noexcept {
    return visible(px / cell_size_, py / cell_size_);
  }

  [[nodiscard]] std::size_t hidden_count() const noexcept;
  [[nodiscard]] std::vector<Cell> hidden_cells() const;
  [[nodiscard]] const std::vector<std::uint8_t>& values() const noexcept { return values_; }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  int cols_ = 0;
  int rows_ = 0;
  int cell_size_ = 1;
  std::vector<std::uint8_t> values_;
};

/// Continuous per-pixel visibility in [0, 1].
class SoftMask {
 public:
  SoftMask() = default;
  SoftMask(int width, int height, double fill = 0.0);
  explicit SoftMask(RealMap values);

  [[nodiscard]] int width() const noexcept { return map_.width; }
  [[nodiscard]] int height() const noexcept { return map_.height; }
  double& at(int x, int y) noexcept { return map_.at(x, y); }
  [[nodiscard]] double at(int x, int y) const noexcept { return map_.at(x, y); }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return map_.values; }
  std::vector<double>& values() noexcept { return map_.values; }

  /// Sum of squared values (the soft-mask magnitude ||M||^2), distinct from
  /// the hard mask's hidden_count.
  [[nodiscard]] double energy() const noexcept;

 private:
  RealMap map_;
};

/// Hidden cells become 0 in every channel; visible cells are copied.
ImageTensor apply_mask(const ImageTensor& image, const Mask& mask);

nlohmann::json mask_to_json(const Mask& mask);
Mask mask_from_json(const nlohmann::json& j);
/// Writes the pixel-resolution mask as a 1-bit PNG (white = visible).
void save_mask_png(const std::filesystem::path& path, const Mask& mask);

}  // namespace hideseek
