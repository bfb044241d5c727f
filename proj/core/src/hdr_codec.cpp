#include <cmath>
#include <cstdio>
#include <string>

#include "relight/envmap.hpp"
#include "relight/error.hpp"

namespace relight::env {
namespace {

struct Rgbe {
  std::uint8_t r, g, b, e;
};

Rgb rgbe_to_float(const Rgbe& p) {
  if (p.e == 0) return {};
  const double f = std::ldexp(1.0, static_cast<int>(p.e) - 136);
  return {static_cast<float>(p.r * f), static_cast<float>(p.g * f), static_cast<float>(p.b * f)};
}

Rgbe float_to_rgbe(const Rgb& c) {
  const double v = std::max({static_cast<double>(c.r), static_cast<double>(c.g), static_cast<double>(c.b)});
  if (v < 1e-32) return {0, 0, 0, 0};
  int e = 0;
  const double m = std::frexp(v, &e);
  const double scale = m * 256.0 / v;
  auto q = [&](float x) { return static_cast<std::uint8_t>(std::min(255.0, std::max(0.0, x * scale))); };
  return {q(c.r), q(c.g), q(c.b), static_cast<std::uint8_t>(e + 128)};
}

class Cursor {
 public:
  explicit Cursor(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::string line() {
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
    if (pos_ >= bytes_.size()) throw DecodeError("unterminated HDR header line", start);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + start), pos_ - start);
    ++pos_;
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
  }

  std::uint8_t byte(const char* context) {
    if (pos_ >= bytes_.size()) throw DecodeError(std::string("truncated HDR data in ") + context, pos_);
    return bytes_[pos_++];
  }

  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void read_flat(Cursor& in, std::vector<Rgbe>& row, std::size_t first) {
  for (std::size_t x = first; x < row.size(); ++x) {
    row[x].r = in.byte("flat scanline");
    row[x].g = in.byte("flat scanline");
    row[x].b = in.byte("flat scanline");
    row[x].e = in.byte("flat scanline");
  }
}

void read_scanline(Cursor& in, std::vector<Rgbe>& row) {
  const int w = static_cast<int>(row.size());
  if (w < 8 || w > 0x7fff) {
    read_flat(in, row, 0);
    return;
  }
  const std::size_t start = in.pos();
  Rgbe head{in.byte("scanline"), in.byte("scanline"), in.byte("scanline"), in.byte("scanline")};
  if (head.r != 2 || head.g != 2 || (head.b & 0x80)) {
    row[0] = head;
    read_flat(in, row, 1);
    return;
  }
  if (((head.b << 8) | head.e) != w) throw DecodeError("RLE scanline width mismatch", start);

  std::vector<std::uint8_t> channel(w);
  for (int c = 0; c < 4; ++c) {
    int x = 0;
    while (x < w) {
      const std::size_t run_start = in.pos();
      int count = in.byte("RLE run");
      if (count > 128) {
        count -= 128;
        if (count > w - x) throw DecodeError("RLE run overflows scanline", run_start);
        const std::uint8_t value = in.byte("RLE run");
        for (int k = 0; k < count; ++k) channel[x++] = value;
      } else {
        if (count == 0 || count > w - x) throw DecodeError("bad RLE literal count", run_start);
        for (int k = 0; k < count; ++k) channel[x++] = in.byte("RLE literal");
      }
    }
    for (int k = 0; k < w; ++k) {
      std::uint8_t* dst = c == 0 ? &row[k].r : c == 1 ? &row[k].g : c == 2 ? &row[k].b : &row[k].e;
      *dst = channel[k];
    }
  }
}

// Run-length encodes one component stream.
void write_rle(Bytes& out, const std::vector<std::uint8_t>& data) {
  constexpr int kMinRun = 4;
  const int n = static_cast<int>(data.size());
  int cur = 0;
  while (cur < n) {
    int beg_run = cur, run_count = 0, old_run_count = 0;
    while (run_count < kMinRun && beg_run < n) {
      beg_run += run_count;
      old_run_count = run_count;
      run_count = 1;
      while (beg_run + run_count < n && run_count < 127 && data[beg_run] == data[beg_run + run_count]) ++run_count;
    }
    if (old_run_count > 1 && old_run_count == beg_run - cur) {
      out.push_back(static_cast<std::uint8_t>(128 + old_run_count));
      out.push_back(data[cur]);
      cur = beg_run;
    }
    while (cur < beg_run) {
      const int nonrun = std::min(128, beg_run - cur);
      out.push_back(static_cast<std::uint8_t>(nonrun));
      out.insert(out.end(), data.begin() + cur, data.begin() + cur + nonrun);
      cur += nonrun;
    }
    if (run_count >= kMinRun) {
      out.push_back(static_cast<std::uint8_t>(128 + run_count));
      out.push_back(data[beg_run]);
      cur += run_count;
    }
  }
}

}  // namespace

EnvMap decode_radiance_hdr(std::span<const std::uint8_t> bytes) {
  Cursor in(bytes);
  const std::string magic = in.line();
  if (magic.rfind("#?", 0) != 0) throw DecodeError("not a Radiance HDR file: bad magic", 0);
  for (;;) {
    const std::size_t at = in.pos();
    const std::string line = in.line();
    if (line.empty()) break;
    if (line.rfind("FORMAT=", 0) == 0 && line != "FORMAT=32-bit_rle_rgbe") {
      throw DecodeError("unsupported HDR pixel format '" + line.substr(7) + "'", at);
    }
  }
  const std::size_t res_at = in.pos();
  const std::string res = in.line();
  int h = 0, w = 0;
  char ys[3] = {}, xs[3] = {};
  if (std::sscanf(res.c_str(), "%2s %d %2s %d", ys, &h, xs, &w) != 4) {
    throw DecodeError("malformed HDR resolution line", res_at);
  }
  if (std::string(ys) != "-Y" || std::string(xs) != "+X") {
    throw DecodeError("unsupported HDR orientation '" + res + "'", res_at);
  }
  if (h <= 0 || w <= 0) throw DecodeError("bad HDR dimensions", res_at);
  if (w != 2 * h) throw DecodeError("HDR environment must be equirectangular (width = 2 * height)", res_at);

  ImageF img(w, h, 3, ColorSpace::LinearRgb);
  std::vector<Rgbe> row(w);
  for (int y = 0; y < h; ++y) {
    read_scanline(in, row);
    for (int x = 0; x < w; ++x) img.set_rgb(x, y, rgbe_to_float(row[x]));
  }
  return EnvMap(std::move(img));
}

Bytes encode_radiance_hdr(const EnvMap& env) {
  require(!env.empty(), "encode_radiance_hdr: empty environment");
  const int h = env.height(), w = env.width();
  const std::string header = "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y " + std::to_string(h) + " +X " +
                             std::to_string(w) + "\n";
  Bytes out(header.begin(), header.end());
  const bool rle = w >= 8 && w <= 0x7fff;
  std::vector<std::uint8_t> comp[4];
  for (auto& c : comp) c.resize(w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Rgbe p = float_to_rgbe(env.at(y, x));
      comp[0][x] = p.r;
      comp[1][x] = p.g;
      comp[2][x] = p.b;
      comp[3][x] = p.e;
    }
    if (!rle) {
      for (int x = 0; x < w; ++x)
        for (auto& c : comp) out.push_back(c[x]);
      continue;
    }
    out.push_back(2);
    out.push_back(2);
    out.push_back(static_cast<std::uint8_t>(w >> 8));
    out.push_back(static_cast<std::uint8_t>(w & 0xff));
    for (auto& c : comp) write_rle(out, c);
  }
  return out;
}

}  // namespace relight::env
