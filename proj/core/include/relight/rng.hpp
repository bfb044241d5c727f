#pragma once

#include <cmath>
#include <cstdint>

namespace relight {

// Counter-based generator: output k of stream (seed, stream) is a fixed hash
// of (key, k), so results are identical across platforms and do not depend
// on how work is partitioned. `split` derives independent child streams.
class Rng {
 public:
  explicit constexpr Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL))) {}

  constexpr Rng split(std::uint64_t stream) const {
    Rng child(0);
    child.key_ = mix(key_ ^ mix(stream + 0x8cb92ba72f3d8dd7ULL));
    return child;
  }

  constexpr std::uint64_t at(std::uint64_t counter) const {
    return mix(key_ + counter * 0x9e3779b97f4a7c15ULL);
  }

  constexpr std::uint64_t next_u64() { return at(counter_++); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return to_unit(next_u64()); }

  double uniform_at(std::uint64_t counter) const { return to_unit(at(counter)); }

  // Uniform integer in [0, n). Rejection keeps it unbiased.
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  // Standard normal by Box-Muller; consumes two outputs.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return box_muller(u1, u2);
  }

  // Standard normal from the fixed pair of outputs (2k, 2k+1).
  double normal_at(std::uint64_t k) const {
    return box_muller(uniform_at(2 * k), uniform_at(2 * k + 1));
  }

  std::uint64_t counter() const { return counter_; }

 private:
  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static double to_unit(std::uint64_t v) { return static_cast<double>(v >> 11) * 0x1.0p-53; }

  static double box_muller(double u1, double u2) {
    const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    return r * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace relight
