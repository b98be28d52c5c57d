#pragma once

#include <filesystem>
#include <string>

#include "hideseek/image.hpp"
#include "hideseek/rng.hpp"

namespace testing_support {

inline hideseek::ImageTensor random_unit(int c, int w, int h, hideseek::Rng& rng, double lo = 0.0, double hi = 1.0) {
  hideseek::ImageTensor img(c, w, h);
  for (double& v : img.values()) v = rng.uniform(lo, hi);
  return img;
}

inline hideseek::ImageTensor random_u8(int c, int w, int h, hideseek::Rng& rng) {
  hideseek::ImageTensor img(c, w, h, hideseek::ValueDomain::kU8);
  for (double& v : img.values()) v = static_cast<double>(rng.index(256));
  return img;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("hideseek-test-" + tag + "-" + std::to_string(counter()++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  static int& counter() {
    static int n = 0;
    return n;
  }
  std::filesystem::path path_;
};

}  // namespace testing_support
