#pragma once

#include <filesystem>
#include <string>

#include "relight/image.hpp"
#include "relight/rng.hpp"

namespace relight::test {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "relight");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

ImageF random_image(int w, int h, int channels, ColorSpace space, std::uint64_t seed, float lo = 0.0f,
                    float hi = 1.0f);

// Random Lab image with L in [0, 100] and a, b in [-60, 60].
ImageF random_lab(int w, int h, std::uint64_t seed);

double max_abs_diff(const ImageF& a, const ImageF& b);

}  // namespace relight::test
