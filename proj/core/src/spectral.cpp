#include "hideseek/spectral.hpp"

#include <cmath>
#include <numbers>

#include "hideseek/error.hpp"

namespace hideseek {

using cd = std::complex<double>;

Spectrum::Spectrum(int channels, int width, int height)
    : channels_(channels), width_(width), height_(height),
      bins_(static_cast<std::size_t>(channels) * width * height) {}

namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place 1D transform of `n` elements spaced `stride` apart. `sign` is -1
// for the forward transform and +1 for the (unscaled) inverse.
class Line {
 public:
  Line(std::size_t n, int sign) : n_(n), buf_(n), twiddle_(n) {
    for (std::size_t k = 0; k < n; ++k) {
      const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      twiddle_[k] = cd(std::cos(angle), std::sin(angle));
    }
  }

  void run(cd* data, std::size_t stride) {
    for (std::size_t i = 0; i < n_; ++i) buf_[i] = data[i * stride];
    if (is_power_of_two(n_)) {
      radix2();
      for (std::size_t i = 0; i < n_; ++i) data[i * stride] = buf_[i];
    } else {
      for (std::size_t k = 0; k < n_; ++k) {
        cd acc = 0.0;
        std::size_t idx = 0;
        for (std::size_t j = 0; j < n_; ++j) {
          acc += buf_[j] * twiddle_[idx];
          idx += k;
          if (idx >= n_) idx -= n_;
        }
        data[k * stride] = acc;
      }
    }
  }

 private:
  void radix2() {
    for (std::size_t i = 1, j = 0; i < n_; ++i) {
      std::size_t bit = n_ >> 1;
      for (; j & bit; bit >>= 1) j ^= bit;
      j ^= bit;
      if (i < j) std::swap(buf_[i], buf_[j]);
    }
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t step = n_ / len;
      for (std::size_t i = 0; i < n_; i += len) {
        for (std::size_t k = 0; k < len / 2; ++k) {
          const cd t = buf_[i + k + len / 2] * twiddle_[k * step];
          const cd u = buf_[i + k];
          buf_[i + k] = u + t;
          buf_[i + k + len / 2] = u - t;
        }
      }
    }
  }

  std::size_t n_;
  std::vector<cd> buf_;
  std::vector<cd> twiddle_;
};

void transform_planes(Spectrum& s, int sign) {
  const auto w = static_cast<std::size_t>(s.width());
  const auto h = static_cast<std::size_t>(s.height());
  Line rows(w, sign);
  Line cols(h, sign);
  for (int c = 0; c < s.channels(); ++c) {
    cd* plane = &s.at(c, 0, 0);
    for (std::size_t y = 0; y < h; ++y) rows.run(plane + y * w, 1);
    for (std::size_t x = 0; x < w; ++x) cols.run(plane + x, w);
  }
}

void require_same(const ImageTensor& a, const ImageTensor& b) {
  if (!a.same_shape(b)) fail(ErrorCode::kShapeMismatch, "images differ in shape");
}

}  // namespace

Spectrum dft2(const ImageTensor& image) {
  if (image.empty()) fail(ErrorCode::kEmptyInput, "cannot transform an empty image");
  const ImageTensor unit = image.to_unit();
  Spectrum s(unit.channels(), unit.width(), unit.height());
  const auto vals = unit.values();
  for (std::size_t i = 0; i < vals.size(); ++i) s.bins()[i] = vals[i];
  transform_planes(s, -1);
  return s;
}

ImageTensor idft2_real(const Spectrum& spectrum) {
  Spectrum s = spectrum;
  transform_planes(s, +1);
  ImageTensor out(s.channels(), s.width(), s.height(), ValueDomain::kUnitFloat);
  const double scale = 1.0 / (static_cast<double>(s.width()) * s.height());
  auto vals = out.values();
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = s.bins()[i].real() * scale;
  return out;
}

std::vector<RealMap> spectrum_weight(const Spectrum& fx, const Spectrum& fy, double alpha) {
  if (!fx.same_shape(fy)) fail(ErrorCode::kShapeMismatch, "spectra differ in shape");
  std::vector<RealMap> out;
  out.reserve(static_cast<std::size_t>(fx.channels()));
  for (int c = 0; c < fx.channels(); ++c) {
    RealMap w(fx.width(), fx.height());
    for (int v = 0; v < fx.height(); ++v) {
      for (int u = 0; u < fx.width(); ++u) {
        const double mag = std::abs(fx.at(c, u, v) - fy.at(c, u, v));
        w.at(u, v) = mag == 0.0 ? 0.0 : std::pow(mag, alpha);
      }
    }
    out.push_back(std::move(w));
  }
  return out;
}

double frequency_loss_weighted(const ImageTensor& x, const ImageTensor& x_tilde,
                               const std::vector<RealMap>& weight) {
  require_same(x, x_tilde);
  if (weight.size() != static_cast<std::size_t>(x.channels())) {
    fail(ErrorCode::kShapeMismatch, "need one weight map per channel");
  }
  const Spectrum fx = dft2(x);
  const Spectrum fy = dft2(x_tilde);
  double total = 0.0;
  for (int c = 0; c < x.channels(); ++c) {
    double acc = 0.0;
    for (int v = 0; v < x.height(); ++v)
      for (int u = 0; u < x.width(); ++u) acc += weight[c].at(u, v) * std::norm(fx.at(c, u, v) - fy.at(c, u, v));
    total += acc / static_cast<double>(x.pixel_count());
  }
  return total / x.channels();
}

double frequency_loss(const ImageTensor& x, const ImageTensor& x_tilde, double alpha) {
  return frequency_loss_with_grad(x, x_tilde, alpha).value;
}

FrequencyLossGrad frequency_loss_with_grad(const ImageTensor& x, const ImageTensor& x_tilde, double alpha) {
  require_same(x, x_tilde);
  const Spectrum fx = dft2(x);
  const Spectrum fy = dft2(x_tilde);
  const std::vector<RealMap> weight = spectrum_weight(fx, fy, alpha);

  // d/dx~ of (1/(C w h)) sum omega |D|^2 with D = F_x - F_x~ and omega fixed is
  // -(2 / C) * Re idft(omega * D).
  Spectrum weighted(x.channels(), x.width(), x.height());
  double total = 0.0;
  for (int c = 0; c < x.channels(); ++c) {
    double acc = 0.0;
    for (int v = 0; v < x.height(); ++v) {
      for (int u = 0; u < x.width(); ++u) {
        const cd d = fx.at(c, u, v) - fy.at(c, u, v);
        const double w = weight[c].at(u, v);
        acc += w * std::norm(d);
        weighted.at(c, u, v) = w * d;
      }
    }
    total += acc / static_cast<double>(x.pixel_count());
  }

  FrequencyLossGrad out;
  out.value = total / x.channels();
  out.grad = idft2_real(weighted);
  const double scale = -2.0 / x.channels();
  for (double& g : out.grad.values()) g *= scale;
  return out;
}

}  // namespace hideseek
