#pragma once

#include <cstdint>
#include <vector>

#include "hideseek/dataset.hpp"
#include "hideseek/image.hpp"
#include "hideseek/rng.hpp"

namespace hideseek {

/// Recipe for the desk-scale "clean image" corpus: a few low-frequency
/// colour waves and soft blobs over a base colour, plus fine Gaussian
/// texture, quantized to u8.
struct SyntheticOptions {
  int channels = 3;
  int width = 64;
  int height = 64;
  int waves = 4;
  int max_cycles = 3;          // per image side
  int blobs = 2;
  double texture_sigma = 2.0;  // u8 levels
};

ImageTensor synthetic_image(const SyntheticOptions& options, Rng& rng);

/// `count` images named img_0000, img_0001, ...; image i uses rng stream i of
/// `seed`, so any prefix of a larger set is identical.
std::vector<NamedImage> synthetic_dataset(int count, const SyntheticOptions& options, std::uint64_t seed);

/// Every channel-pixel set to `level` (u8).
ImageTensor constant_image(int channels, int width, int height, int level);

/// I.i.d. uniform u8 noise.
ImageTensor noise_image(int channels, int width, int height, Rng& rng);

}  // namespace hideseek
