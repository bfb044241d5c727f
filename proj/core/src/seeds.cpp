#include "relight/seeds.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "relight/error.hpp"
#include "relight/rng.hpp"

namespace relight::scribble {
namespace {

constexpr int kBins = kSeedsBinsPerChannel * kSeedsBinsPerChannel * kSeedsBinsPerChannel;
constexpr double kMinGain = 1e-9;

struct BinCount {
  std::int32_t bin;
  std::int32_t count;
};

class Seeds {
 public:
  Seeds(std::vector<std::int32_t> bins, SegmentLabels labels)
      : w_(labels.width), h_(labels.height), bins_(std::move(bins)), lab_(std::move(labels)) {
    hist_.assign(static_cast<std::size_t>(lab_.count) * kBins, 0);
    size_.assign(lab_.count, 0);
    sq_.assign(lab_.count, 0);
    for (std::size_t i = 0; i < bins_.size(); ++i) {
      ++hist_[static_cast<std::size_t>(lab_.labels[i]) * kBins + bins_[i]];
      ++size_[lab_.labels[i]];
    }
    for (int s = 0; s < lab_.count; ++s) {
      std::int64_t acc = 0;
      for (int b = 0; b < kBins; ++b) {
        const std::int64_t v = hist(s, b);
        acc += v * v;
      }
      sq_[s] = acc;
    }
    stamp_.assign(bins_.size(), 0);
  }

  double energy() const {
    double e = 0;
    for (int s = 0; s < lab_.count; ++s) e += static_cast<double>(sq_[s]) / static_cast<double>(size_[s]);
    return e;
  }

  std::size_t block_sweep(int bs, Rng rng) {
    const int bx = (w_ + bs - 1) / bs, by = (h_ + bs - 1) / bs;
    std::vector<std::int32_t> order(static_cast<std::size_t>(bx) * by);
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);
    std::size_t moves = 0;
    for (std::int32_t id : order) {
      const int x0 = (id % bx) * bs, y0 = (id / bx) * bs;
      if (try_block(x0, y0, std::min(x0 + bs, w_), std::min(y0 + bs, h_))) ++moves;
    }
    return moves;
  }

  std::size_t pixel_sweep(Rng rng) {
    std::vector<std::int32_t> order(bins_.size());
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);
    std::size_t moves = 0;
    for (std::int32_t idx : order) {
      if (try_pixel(idx % w_, idx / w_)) ++moves;
    }
    return moves;
  }

  SegmentLabels take() { return std::move(lab_); }

 private:
  std::int32_t& hist(int s, int b) { return hist_[static_cast<std::size_t>(s) * kBins + b]; }
  std::int32_t hist(int s, int b) const { return hist_[static_cast<std::size_t>(s) * kBins + b]; }
  std::int32_t& label(int x, int y) { return lab_.labels[static_cast<std::size_t>(y) * w_ + x]; }
  bool inside(int x, int y) const { return x >= 0 && y >= 0 && x < w_ && y < h_; }

  static void shuffle(std::vector<std::int32_t>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.uniform_index(i)]);
  }

  // Energy change from moving a set with histogram `part` (size n) from a to c.
  double gain(int a, int c, const std::vector<BinCount>& part, std::int64_t n) const {
    std::int64_t cross_a = 0, cross_c = 0, self = 0;
    for (const BinCount& p : part) {
      cross_a += static_cast<std::int64_t>(hist(a, p.bin)) * p.count;
      cross_c += static_cast<std::int64_t>(hist(c, p.bin)) * p.count;
      self += static_cast<std::int64_t>(p.count) * p.count;
    }
    const std::int64_t sq_a = sq_[a] - 2 * cross_a + self;
    const std::int64_t sq_c = sq_[c] + 2 * cross_c + self;
    return static_cast<double>(sq_a) / static_cast<double>(size_[a] - n) +
           static_cast<double>(sq_c) / static_cast<double>(size_[c] + n) -
           static_cast<double>(sq_[a]) / static_cast<double>(size_[a]) -
           static_cast<double>(sq_[c]) / static_cast<double>(size_[c]);
  }

  void apply(int a, int c, const std::vector<BinCount>& part, std::int64_t n) {
    for (const BinCount& p : part) {
      const std::int64_t ha = hist(a, p.bin), hc = hist(c, p.bin);
      sq_[a] += (ha - p.count) * (ha - p.count) - ha * ha;
      sq_[c] += (hc + p.count) * (hc + p.count) - hc * hc;
      hist(a, p.bin) -= p.count;
      hist(c, p.bin) += p.count;
    }
    size_[a] -= n;
    size_[c] += n;
  }

  bool try_block(int x0, int y0, int x1, int y1) {
    const std::int32_t a = label(x0, y0);
    std::array<std::int32_t, kBins> local{};
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) {
        if (label(x, y) != a) return false;
        ++local[bins_[static_cast<std::size_t>(y) * w_ + x]];
      }
    const std::int64_t n = static_cast<std::int64_t>(x1 - x0) * (y1 - y0);
    if (size_[a] <= n) return false;

    std::vector<BinCount> part;
    for (int b = 0; b < kBins; ++b)
      if (local[b] > 0) part.push_back({b, local[b]});

    neighbors_.clear();
    auto visit = [&](int x, int y) {
      if (!inside(x, y)) return;
      const std::int32_t l = label(x, y);
      if (l != a && std::find(neighbors_.begin(), neighbors_.end(), l) == neighbors_.end()) neighbors_.push_back(l);
    };
    for (int x = x0; x < x1; ++x) {
      visit(x, y0 - 1);
      visit(x, y1);
    }
    for (int y = y0; y < y1; ++y) {
      visit(x0 - 1, y);
      visit(x1, y);
    }
    if (neighbors_.empty()) return false;
    std::sort(neighbors_.begin(), neighbors_.end());

    int best = -1;
    double best_gain = kMinGain;
    for (std::int32_t c : neighbors_) {
      const double g = gain(a, c, part, n);
      if (g > best_gain) {
        best_gain = g;
        best = c;
      }
    }
    if (best < 0) return false;
    if (!remains_connected(a, x0, y0, x1, y1, size_[a] - n)) return false;

    apply(a, best, part, n);
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) label(x, y) = best;
    return true;
  }

  // Flood fill of segment a with the rectangle removed.
  bool remains_connected(std::int32_t a, int x0, int y0, int x1, int y1, std::int64_t expected) {
    auto in_rect = [&](int x, int y) { return x >= x0 && x < x1 && y >= y0 && y < y1; };
    int sx = -1, sy = -1;
    for (int x = x0; x < x1 && sx < 0; ++x) {
      if (inside(x, y0 - 1) && label(x, y0 - 1) == a) sx = x, sy = y0 - 1;
      else if (inside(x, y1) && label(x, y1) == a) sx = x, sy = y1;
    }
    for (int y = y0; y < y1 && sx < 0; ++y) {
      if (inside(x0 - 1, y) && label(x0 - 1, y) == a) sx = x0 - 1, sy = y;
      else if (inside(x1, y) && label(x1, y) == a) sx = x1, sy = y;
    }
    if (sx < 0) return false;

    ++generation_;
    stack_.clear();
    stack_.push_back(sy * w_ + sx);
    stamp_[stack_.back()] = generation_;
    std::int64_t seen = 0;
    while (!stack_.empty()) {
      const std::int32_t idx = stack_.back();
      stack_.pop_back();
      ++seen;
      const int x = idx % w_, y = idx / w_;
      const int nx[4] = {x + 1, x - 1, x, x};
      const int ny[4] = {y, y, y + 1, y - 1};
      for (int k = 0; k < 4; ++k) {
        if (!inside(nx[k], ny[k]) || in_rect(nx[k], ny[k])) continue;
        const std::int32_t j = ny[k] * w_ + nx[k];
        if (stamp_[j] == generation_ || lab_.labels[j] != a) continue;
        stamp_[j] = generation_;
        stack_.push_back(j);
      }
    }
    return seen == expected;
  }

  // Removing p keeps its segment 4-connected if all same-label 4-neighbors lie
  // on one run of same-label pixels around the 8-ring.
  bool is_simple(int x, int y, std::int32_t a) {
    static constexpr int dx[8] = {0, 1, 1, 1, 0, -1, -1, -1};
    static constexpr int dy[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
    bool in[8];
    int start = -1;
    for (int k = 0; k < 8; ++k) {
      in[k] = inside(x + dx[k], y + dy[k]) && label(x + dx[k], y + dy[k]) == a;
      if (!in[k] && start < 0) start = k;
    }
    if (start < 0) return false;
    int run[8];
    int current = 0;
    bool prev = false;
    for (int step = 1; step <= 8; ++step) {
      const int k = (start + step) % 8;
      if (in[k] && !prev) ++current;
      run[k] = in[k] ? current : 0;
      prev = in[k];
    }
    int seen = 0;
    for (int k = 0; k < 8; k += 2) {
      if (!in[k]) continue;
      if (seen == 0) seen = run[k];
      else if (run[k] != seen) return false;
    }
    return seen != 0;
  }

  bool try_pixel(int x, int y) {
    const std::int32_t a = label(x, y);
    std::int32_t cand[4];
    int nc = 0;
    const int nx[4] = {x, x + 1, x, x - 1};
    const int ny[4] = {y - 1, y, y + 1, y};
    for (int k = 0; k < 4; ++k) {
      if (!inside(nx[k], ny[k])) continue;
      const std::int32_t l = label(nx[k], ny[k]);
      if (l != a && std::find(cand, cand + nc, l) == cand + nc) cand[nc++] = l;
    }
    if (nc == 0 || size_[a] <= 1) return false;

    const std::int32_t b = bins_[static_cast<std::size_t>(y) * w_ + x];
    const std::int64_t ha = hist(a, b);
    const double lose = static_cast<double>(sq_[a] - 2 * ha + 1) / static_cast<double>(size_[a] - 1) -
                        static_cast<double>(sq_[a]) / static_cast<double>(size_[a]);
    std::sort(cand, cand + nc);
    int best = -1;
    double best_gain = kMinGain;
    for (int k = 0; k < nc; ++k) {
      const std::int32_t c = cand[k];
      const std::int64_t hc = hist(c, b);
      const double g = lose + static_cast<double>(sq_[c] + 2 * hc + 1) / static_cast<double>(size_[c] + 1) -
                       static_cast<double>(sq_[c]) / static_cast<double>(size_[c]);
      if (g > best_gain) {
        best_gain = g;
        best = c;
      }
    }
    if (best < 0 || !is_simple(x, y, a)) return false;
    const std::vector<BinCount> part{{b, 1}};
    apply(a, best, part, 1);
    label(x, y) = best;
    return true;
  }

  int w_, h_;
  std::vector<std::int32_t> bins_;
  SegmentLabels lab_;
  std::vector<std::int32_t> hist_;
  std::vector<std::int64_t> size_;
  std::vector<std::int64_t> sq_;
  std::vector<std::int32_t> neighbors_;
  std::vector<std::int32_t> stack_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t generation_ = 0;
};

}  // namespace

SegmentLabels grid_labels(int width, int height, int k) {
  require(width > 0 && height > 0, "grid_labels: empty image");
  require(k >= 1, "grid_labels: k must be >= 1");
  const int nx = std::clamp(static_cast<int>(std::lround(std::sqrt(static_cast<double>(k) * width / height))), 1, width);
  const int ny = std::clamp(static_cast<int>(std::lround(static_cast<double>(k) / nx)), 1, height);
  SegmentLabels out{width, height, nx * ny, std::vector<std::int32_t>(static_cast<std::size_t>(width) * height)};
  for (int y = 0; y < height; ++y) {
    const int gy = static_cast<int>(static_cast<std::int64_t>(y) * ny / height);
    for (int x = 0; x < width; ++x) {
      const int gx = static_cast<int>(static_cast<std::int64_t>(x) * nx / width);
      out.labels[static_cast<std::size_t>(y) * width + x] = gy * nx + gx;
    }
  }
  return out;
}

SegmentLabels pixel_labels(int width, int height) {
  require(width > 0 && height > 0, "pixel_labels: empty image");
  SegmentLabels out{width, height, width * height, std::vector<std::int32_t>(static_cast<std::size_t>(width) * height)};
  std::iota(out.labels.begin(), out.labels.end(), 0);
  return out;
}

std::vector<std::int32_t> seeds_bins(const ImageF& lab) {
  require(lab.channels() == 3, "seeds: expected a 3-channel image");
  double lo[3], hi[3];
  for (int c = 0; c < 3; ++c) {
    lo[c] = INFINITY;
    hi[c] = -INFINITY;
  }
  const std::size_t n = lab.pixel_count();
  auto d = lab.data();
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) {
      lo[c] = std::min(lo[c], static_cast<double>(d[3 * i + c]));
      hi[c] = std::max(hi[c], static_cast<double>(d[3 * i + c]));
    }
  std::vector<std::int32_t> bins(n);
  constexpr int m = kSeedsBinsPerChannel;
  for (std::size_t i = 0; i < n; ++i) {
    int b = 0;
    for (int c = 0; c < 3; ++c) {
      int q = 0;
      if (hi[c] > lo[c]) q = std::min(m - 1, static_cast<int>((d[3 * i + c] - lo[c]) / (hi[c] - lo[c]) * m));
      b = b * m + q;
    }
    bins[i] = b;
  }
  return bins;
}

double histogram_energy(const std::vector<std::int32_t>& bins, const SegmentLabels& labels) {
  require(bins.size() == labels.labels.size(), "histogram_energy: size mismatch");
  std::vector<std::int64_t> hist(static_cast<std::size_t>(labels.count) * kBins, 0);
  std::vector<std::int64_t> size(labels.count, 0);
  for (std::size_t i = 0; i < bins.size(); ++i) {
    ++hist[static_cast<std::size_t>(labels.labels[i]) * kBins + bins[i]];
    ++size[labels.labels[i]];
  }
  double e = 0;
  for (int s = 0; s < labels.count; ++s) {
    if (size[s] == 0) continue;
    std::int64_t sq = 0;
    for (int b = 0; b < kBins; ++b) sq += hist[static_cast<std::size_t>(s) * kBins + b] * hist[static_cast<std::size_t>(s) * kBins + b];
    e += static_cast<double>(sq) / static_cast<double>(size[s]);
  }
  return e;
}

SeedsResult seeds_segment(const ImageF& lab, int target_k, int levels, int iterations, std::uint64_t seed) {
  require(lab.space() == ColorSpace::Lab, "seeds_segment: image must be tagged Lab");
  require(target_k >= 1, "seeds_segment: target_k must be >= 1");
  require(static_cast<std::size_t>(target_k) * 16 <= lab.pixel_count(),
          "seeds_segment: target_k must be <= pixel count / 16");
  require(levels >= 0 && iterations >= 0, "seeds_segment: levels and iterations must be non-negative");

  SegmentLabels grid = grid_labels(lab.width(), lab.height(), target_k);
  const int nx = std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(target_k) * lab.width() / lab.height()))));
  const int ny = std::max(1, grid.count / nx);
  const int cell = std::max(1, std::min(lab.width() / nx, lab.height() / ny));

  Seeds s(seeds_bins(lab), std::move(grid));
  SeedsResult out;
  out.energy.push_back(s.energy());
  const Rng rng(seed);

  std::vector<int> sizes;
  for (int l = 0; l < levels; ++l) {
    const int bs = cell >> (l + 1);
    if (bs < 2) break;
    if (sizes.empty() || sizes.back() != bs) sizes.push_back(bs);
  }
  for (std::size_t l = 0; l < sizes.size(); ++l) {
    out.block_moves += s.block_sweep(sizes[l], rng.split(l));
    out.energy.push_back(s.energy());
  }
  for (int it = 0; it < iterations; ++it) {
    const std::size_t moved = s.pixel_sweep(rng.split(1000 + it));
    out.pixel_moves += moved;
    out.energy.push_back(s.energy());
    if (moved == 0) break;
  }
  out.labels = s.take();
  return out;
}

}  // namespace relight::scribble
