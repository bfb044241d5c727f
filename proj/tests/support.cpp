#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <unistd.h>

namespace relight::test {

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

ImageF random_image(int w, int h, int channels, ColorSpace space, std::uint64_t seed, float lo, float hi) {
  ImageF img(w, h, channels, space);
  Rng rng(seed);
  for (float& v : img.data()) v = lo + (hi - lo) * static_cast<float>(rng.uniform());
  return img;
}

ImageF random_lab(int w, int h, std::uint64_t seed) {
  ImageF img(w, h, 3, ColorSpace::Lab);
  Rng rng(seed);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      img.at(x, y, 0) = static_cast<float>(100 * rng.uniform());
      img.at(x, y, 1) = static_cast<float>(120 * rng.uniform() - 60);
      img.at(x, y, 2) = static_cast<float>(120 * rng.uniform() - 60);
    }
  return img;
}

double max_abs_diff(const ImageF& a, const ImageF& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.data().size(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a.data()[i]) - b.data()[i]));
  return m;
}

}  // namespace relight::test
