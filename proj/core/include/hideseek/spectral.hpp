#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "hideseek/image.hpp"

namespace hideseek {

/// Per-channel 2D spectrum. Bin (u, v) pairs u with the x (width) axis and v
/// with the y (height) axis; storage is (c * height + v) * width + u.
class Spectrum {
 public:
  Spectrum() = default;
  Spectrum(int channels, int width, int height);

  [[nodiscard]] int channels() const noexcept { return channels_; }
  [[nodiscard]] int width() const noexcept { return width_; }
  [[nodiscard]] int height() const noexcept { return height_; }
  [[nodiscard]] bool same_shape(const Spectrum& o) const noexcept {
    return channels_ == o.channels_ && width_ == o.width_ && height_ == o.height_;
  }

  std::complex<double>& at(int c, int u, int v) noexcept { return bins_[index(c, u, v)]; }
  [[nodiscard]] const std::complex<double>& at(int c, int u, int v) const noexcept {
    return bins_[index(c, u, v)];
  }
  std::vector<std::complex<double>>& bins() noexcept { return bins_; }
  [[nodiscard]] const std::vector<std::complex<double>>& bins() const noexcept { return bins_; }

 private:
  [[nodiscard]] std::size_t index(int c, int u, int v) const noexcept {
    return (static_cast<std::size_t>(c) * height_ + v) * width_ + u;
  }

  int channels_ = 0;
  int width_ = 0;
  int height_ = 0;
  std::vector<std::complex<double>> bins_;
};

/// Unnormalised forward transform of each channel:
///   F(u, v) = sum_x sum_y X(x, y) exp(-i 2 pi (u x / w + v y / h)).
/// Radix-2 along power-of-two axes, direct summation otherwise.
Spectrum dft2(const ImageTensor& image);

/// Inverse transform (with the 1/(w h) factor), real part only, as a
/// unit_float image.
ImageTensor idft2_real(const Spectrum& spectrum);

/// omega(u, v) = |F_x(u, v) - F_y(u, v)|^alpha per channel, with 0^0 := 0.
std::vector<RealMap> spectrum_weight(const Spectrum& fx, const Spectrum& fy, double alpha = 1.0);

/// (1 / w h) sum_uv omega(u, v) |F_x - F_x~|^2, averaged over channels.
double frequency_loss(const ImageTensor& x, const ImageTensor& x_tilde, double alpha = 1.0);

/// Same loss with a caller-supplied (fixed) weight per channel.
double frequency_loss_weighted(const ImageTensor& x, const ImageTensor& x_tilde,
                               const std::vector<RealMap>& weight);

struct FrequencyLossGrad {
  double value = 0.0;
  ImageTensor grad;  // d loss / d x_tilde, omega held constant
};

FrequencyLossGrad frequency_loss_with_grad(const ImageTensor& x, const ImageTensor& x_tilde,
                                           double alpha = 1.0);

}  // namespace hideseek
