#include "hideseek/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "hideseek/error.hpp"

namespace hideseek {

ImageTensor synthetic_image(const SyntheticOptions& o, Rng& rng) {
  ImageTensor img(o.channels, o.width, o.height, ValueDomain::kUnitFloat);
  const double two_pi = 2.0 * std::numbers::pi;

  std::vector<double> base(static_cast<std::size_t>(o.channels));
  for (double& b : base) b = rng.uniform(0.3, 0.7);

  struct Wave {
    int fx, fy;
    double phase, amplitude;
    std::vector<double> colour;
  };
  std::vector<Wave> waves;
  for (int k = 0; k < o.waves; ++k) {
    Wave w;
    do {
      w.fx = static_cast<int>(rng.index(static_cast<std::size_t>(2 * o.max_cycles + 1))) - o.max_cycles;
      w.fy = static_cast<int>(rng.index(static_cast<std::size_t>(2 * o.max_cycles + 1))) - o.max_cycles;
    } while (w.fx == 0 && w.fy == 0);
    w.phase = rng.uniform(0.0, two_pi);
    w.amplitude = rng.uniform(0.03, 0.12);
    for (int c = 0; c < o.channels; ++c) w.colour.push_back(rng.uniform(0.5, 1.0));
    waves.push_back(std::move(w));
  }

  struct Blob {
    double cx, cy, radius, amplitude;
    std::vector<double> colour;
  };
  std::vector<Blob> blobs;
  for (int k = 0; k < o.blobs; ++k) {
    Blob b{rng.uniform(0.0, o.width), rng.uniform(0.0, o.height),
           rng.uniform(0.12, 0.3) * std::min(o.width, o.height), rng.uniform(-0.15, 0.15), {}};
    for (int c = 0; c < o.channels; ++c) b.colour.push_back(rng.uniform(0.4, 1.0));
    blobs.push_back(std::move(b));
  }

  for (int y = 0; y < o.height; ++y) {
    for (int x = 0; x < o.width; ++x) {
      for (int c = 0; c < o.channels; ++c) {
        double v = base[c];
        for (const Wave& w : waves) {
          v += w.amplitude * w.colour[c] *
               std::cos(two_pi * (w.fx * x / static_cast<double>(o.width) + w.fy * y / static_cast<double>(o.height)) +
                        w.phase);
        }
        for (const Blob& b : blobs) {
          const double d2 = (x - b.cx) * (x - b.cx) + (y - b.cy) * (y - b.cy);
          v += b.amplitude * b.colour[c] * std::exp(-d2 / (2.0 * b.radius * b.radius));
        }
        img.at(c, x, y) = v;
      }
    }
  }

  // Fit into [0.08, 0.92] so the texture and later watermarks never clip.
  const auto [lo_it, hi_it] = std::minmax_element(img.values().begin(), img.values().end());
  const double lo = *lo_it, hi = *hi_it;
  if (lo < 0.08 || hi > 0.92) {
    const double mid = 0.5 * (lo + hi);
    const double scale = std::min(1.0, 0.84 / std::max(hi - lo, 1e-12));
    for (double& v : img.values()) v = 0.5 + (v - mid) * scale;
  }
  for (double& v : img.values()) v += rng.normal() * o.texture_sigma / 255.0;
  return img.to_u8();
}

std::vector<NamedImage> synthetic_dataset(int count, const SyntheticOptions& options, std::uint64_t seed) {
  if (count < 0) fail(ErrorCode::kInvalidArgument, "image count must be non-negative");
  std::vector<NamedImage> out;
  out.reserve(static_cast<std::size_t>(count));
  const Rng root(seed);
  for (int i = 0; i < count; ++i) {
    Rng rng = root.fork(static_cast<std::uint64_t>(i));
    char name[32];
    std::snprintf(name, sizeof(name), "img_%04d", i);
    out.push_back({name, synthetic_image(options, rng)});
  }
  return out;
}

ImageTensor constant_image(int channels, int width, int height, int level) {
  if (level < 0 || level > 255) fail(ErrorCode::kOutOfRange, "u8 level outside [0, 255]");
  return ImageTensor(channels, width, height, ValueDomain::kU8, level);
}

ImageTensor noise_image(int channels, int width, int height, Rng& rng) {
  ImageTensor img(channels, width, height, ValueDomain::kU8);
  for (double& v : img.values()) v = static_cast<double>(rng.index(256));
  return img;
}

}  // namespace hideseek
