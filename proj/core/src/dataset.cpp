#include "hideseek/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "hideseek/error.hpp"

namespace hideseek {

namespace fs = std::filesystem;

std::vector<NamedImage> load_dataset(const fs::path& dir, ValueDomain domain) {
  if (!fs::is_directory(dir)) fail(ErrorCode::kMissingFile, "dataset directory not found", dir.string());

  std::vector<fs::path> files;
  const fs::path manifest = dir / "manifest.txt";
  if (fs::is_regular_file(manifest)) {
    std::ifstream in(manifest);
    std::string line;
    while (std::getline(in, line)) {
      line.erase(std::find_if(line.rbegin(), line.rend(), [](unsigned char ch) { return !std::isspace(ch); }).base(),
                 line.end());
      if (line.empty() || line.front() == '#') continue;
      files.push_back(dir / line);
    }
  } else {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  }

  std::vector<NamedImage> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back({f.stem().string(), load_image(f, domain)});
  return out;
}

void require_uniform_shape(const std::vector<ImageTensor>& images) {
  if (images.empty()) fail(ErrorCode::kEmptyInput, "dataset is empty");
  for (const auto& img : images) {
    if (!img.same_shape(images.front())) fail(ErrorCode::kShapeMismatch, "dataset images differ in shape");
  }
}

void save_dataset(const fs::path& dir, const std::vector<NamedImage>& images) {
  fs::create_directories(dir);
  std::ofstream manifest(dir / "manifest.txt");
  for (const auto& named : images) {
    save_image(dir / (named.id + ".png"), named.image);
    manifest << named.id << ".png\n";
  }
}

std::vector<ImageTensor> images_of(const std::vector<NamedImage>& named) {
  std::vector<ImageTensor> out;
  out.reserve(named.size());
  for (const auto& n : named) out.push_back(n.image);
  return out;
}

}  // namespace hideseek
