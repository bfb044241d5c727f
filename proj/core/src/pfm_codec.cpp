#include <bit>
#include <cmath>
#include <cstring>
#include <string>

#include "relight/codec.hpp"
#include "relight/error.hpp"

namespace relight {
namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::string token() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !is_space(bytes_[pos_])) ++pos_;
    if (start == pos_) throw DecodeError("unexpected end of PFM header", pos_);
    return {reinterpret_cast<const char*>(bytes_.data() + start), pos_ - start};
  }

  // Exactly one whitespace byte separates the scale from the raster.
  void single_space() {
    if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) throw DecodeError("missing PFM header terminator", pos_);
    ++pos_;
  }

  std::size_t pos() const { return pos_; }

 private:
  static bool is_space(std::uint8_t c) { return c == ' ' || c == '\n' || c == '\r' || c == '\t'; }

  void skip_space() {
    while (pos_ < bytes_.size() && is_space(bytes_[pos_])) ++pos_;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

int parse_int(const std::string& s, std::size_t offset) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size() || v <= 0) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DecodeError("bad PFM dimension '" + s + "'", offset);
  }
}

}  // namespace

ImageF decode_pfm(std::span<const std::uint8_t> bytes) {
  HeaderReader reader(bytes);
  const std::string magic = reader.token();
  int channels = 0;
  if (magic == "PF") {
    channels = 3;
  } else if (magic == "Pf") {
    channels = 1;
  } else {
    throw DecodeError("not a PFM file: bad magic '" + magic + "'", 0);
  }
  const int width = parse_int(reader.token(), reader.pos());
  const int height = parse_int(reader.token(), reader.pos());
  const std::string scale_token = reader.token();
  double scale = 0;
  try {
    scale = std::stod(scale_token);
  } catch (const std::exception&) {
    throw DecodeError("bad PFM scale '" + scale_token + "'", reader.pos());
  }
  if (scale == 0 || !std::isfinite(scale)) throw DecodeError("bad PFM scale", reader.pos());
  reader.single_space();

  const bool little = scale < 0;
  const std::size_t start = reader.pos();
  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  if (bytes.size() - start < count * 4) {
    throw DecodeError("truncated PFM raster: need " + std::to_string(count * 4) + " bytes", bytes.size());
  }

  ImageF img(width, height, channels, channels == 3 ? ColorSpace::LinearRgb : ColorSpace::Scalar);
  const bool swap = little != (std::endian::native == std::endian::little);
  for (int row = 0; row < height; ++row) {
    const int y = height - 1 - row;  // bottom-to-top on disk
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        const std::size_t i = (static_cast<std::size_t>(row) * width + x) * channels + c;
        std::uint32_t raw;
        std::memcpy(&raw, bytes.data() + start + 4 * i, 4);
        if (swap) raw = __builtin_bswap32(raw);
        const float v = std::bit_cast<float>(raw);
        if (!std::isfinite(v)) throw DecodeError("non-finite PFM sample", start + 4 * i);
        img.at(x, y, c) = v;
      }
    }
  }
  return img;
}

Bytes encode_pfm(const ImageF& img) {
  require(img.channels() == 1 || img.channels() == 3, "encode_pfm: PFM holds 1 or 3 channels");
  const std::string header = std::string(img.channels() == 3 ? "PF" : "Pf") + "\n" +
                             std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n-1.0\n";
  Bytes out(header.begin(), header.end());
  const std::size_t start = out.size();
  out.resize(start + img.data().size() * 4);
  const bool swap = std::endian::native != std::endian::little;
  const int ch = img.channels();
  for (int row = 0; row < img.height(); ++row) {
    const int y = img.height() - 1 - row;
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < ch; ++c) {
        std::uint32_t raw = std::bit_cast<std::uint32_t>(img.at(x, y, c));
        if (swap) raw = __builtin_bswap32(raw);
        std::memcpy(out.data() + start + 4 * ((static_cast<std::size_t>(row) * img.width() + x) * ch + c), &raw, 4);
      }
    }
  }
  return out;
}

ImageF read_pfm(const std::filesystem::path& path) { return decode_pfm(read_file(path)); }

void write_pfm(const std::filesystem::path& path, const ImageF& img) { write_file_atomic(path, encode_pfm(img)); }

}  // namespace relight
