#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hideseek/image.hpp"

namespace hideseek {

struct NamedImage {
  std::string id;  // file stem
  ImageTensor image;
};

/// A directory of PNG images. When `manifest.txt` (one file name per line,
/// '#' comments allowed) is present only the listed files are loaded, in the
/// listed order; otherwise every *.png is loaded in lexicographic order.
std::vector<NamedImage> load_dataset(const std::filesystem::path& dir, ValueDomain domain);

/// Throws kEmptyInput for an empty set and kShapeMismatch when shapes differ.
void require_uniform_shape(const std::vector<ImageTensor>& images);

void save_dataset(const std::filesystem::path& dir, const std::vector<NamedImage>& images);

std::vector<ImageTensor> images_of(const std::vector<NamedImage>& named);

}  // namespace hideseek
