#include <png.h>

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <string>

#include "relight/codec.hpp"
#include "relight/error.hpp"

namespace relight {
namespace {

struct ReadState {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
  std::string message;
};

void read_callback(png_structp png, png_bytep out, png_size_t length) {
  auto* state = static_cast<ReadState*>(png_get_io_ptr(png));
  if (state->offset + length > state->bytes.size()) {
    state->message = "unexpected end of PNG data";
    state->offset = state->bytes.size();
    png_error(png, "truncated");
  }
  std::memcpy(out, state->bytes.data() + state->offset, length);
  state->offset += length;
}

void error_callback(png_structp png, png_const_charp message) {
  auto* state = static_cast<ReadState*>(png_get_io_ptr(png));
  if (state && state->message.empty()) state->message = message;
  png_longjmp(png, 1);
}

void warning_callback(png_structp, png_const_charp) {}

struct Decoded {
  int width = 0, height = 0, channels = 0, depth = 0;
  std::vector<std::uint8_t> pixels;
  // Owned here rather than inside decode_raw so a longjmp never skips a destructor.
  std::vector<png_bytep> rows;
};

// Returns false on failure with state.message / state.offset set. Kept free of
// objects with destructors between setjmp and any longjmp.
bool decode_raw(ReadState& state, Decoded& out) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &state, error_callback, warning_callback);
  if (!png) {
    state.message = "png_create_read_struct failed";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    state.message = "png_create_info_struct failed";
    return false;
  }
  png_set_read_fn(png, &state, read_callback);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    if (state.message.empty()) state.message = "PNG decode failed";
    return false;
  }

  png_read_info(png, info);
  const png_byte color_type = png_get_color_type(png, info);
  const png_byte bit_depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (bit_depth == 16) png_set_swap(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.depth = png_get_bit_depth(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  out.pixels.resize(row_bytes * static_cast<std::size_t>(out.height));
  out.rows.resize(static_cast<std::size_t>(out.height));
  for (int y = 0; y < out.height; ++y) out.rows[y] = out.pixels.data() + row_bytes * y;
  png_read_image(png, out.rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

struct WriteState {
  Bytes* out;
};

void write_callback(png_structp png, png_bytep data, png_size_t length) {
  auto* state = static_cast<WriteState*>(png_get_io_ptr(png));
  state->out->insert(state->out->end(), data, data + length);
}

void flush_callback(png_structp) {}

void write_error_callback(png_structp png, png_const_charp) { png_longjmp(png, 1); }

bool encode_raw(Bytes& out, const std::vector<png_bytep>& rows, int width, int height, int channels,
                int depth, int level) {
  WriteState state{&out};
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, write_error_callback, warning_callback);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  static constexpr int kColorTypes[] = {PNG_COLOR_TYPE_GRAY, PNG_COLOR_TYPE_GRAY_ALPHA, PNG_COLOR_TYPE_RGB,
                                        PNG_COLOR_TYPE_RGB_ALPHA};
  png_set_write_fn(png, &state, write_callback, flush_callback);
  png_set_compression_level(png, level);
  png_set_IHDR(png, info, width, height, depth, kColorTypes[channels - 1], PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (depth == 16) png_set_swap(png);
  png_write_image(png, const_cast<png_bytepp>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace

ImageF decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw DecodeError("not a PNG file: bad signature", 0);
  }
  ReadState state{bytes, 0, {}};
  Decoded raw;
  if (!decode_raw(state, raw)) throw DecodeError(state.message, state.offset);

  const ColorSpace space = raw.channels >= 3 ? ColorSpace::Srgb : ColorSpace::Scalar;
  ImageF img(raw.width, raw.height, raw.channels, space);
  auto data = img.data();
  if (raw.depth == 16) {
    const auto* src = reinterpret_cast<const std::uint16_t*>(raw.pixels.data());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(src[i] / 65535.0);
  } else {
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(raw.pixels[i] / 255.0);
  }
  return img;
}

Bytes encode_png(const ImageF& img, int bit_depth, int compression_level) {
  require(bit_depth == 8 || bit_depth == 16, "encode_png: bit depth must be 8 or 16");
  require(!img.empty(), "encode_png: empty image");
  const int w = img.width(), h = img.height(), ch = img.channels();
  const std::size_t bytes_per_sample = bit_depth / 8;
  const std::size_t row_bytes = static_cast<std::size_t>(w) * ch * bytes_per_sample;
  std::vector<std::uint8_t> pixels(row_bytes * h);
  const auto data = img.data();
  const double max_value = bit_depth == 16 ? 65535.0 : 255.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double v = std::isfinite(data[i]) ? std::clamp<double>(data[i], 0.0, 1.0) : 0.0;
    const auto q = static_cast<std::uint32_t>(std::lround(v * max_value));
    if (bit_depth == 16) {
      const auto q16 = static_cast<std::uint16_t>(q);
      std::memcpy(pixels.data() + 2 * i, &q16, 2);
    } else {
      pixels[i] = static_cast<std::uint8_t>(q);
    }
  }
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = pixels.data() + row_bytes * y;
  Bytes out;
  if (!encode_raw(out, rows, w, h, ch, bit_depth, std::clamp(compression_level, 0, 9))) {
    throw Error("PNG encode failed");
  }
  return out;
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  static std::atomic<unsigned> counter{0};
  tmp += ".tmp-" + std::to_string(::getpid()) + "-" + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::filesystem::remove(tmp);
      throw Error("short write to '" + tmp.string() + "'");
    }
  }
  std::filesystem::rename(tmp, path);
}

ImageF read_png(const std::filesystem::path& path) { return decode_png(read_file(path)); }

void write_png(const std::filesystem::path& path, const ImageF& img, int bit_depth) {
  write_file_atomic(path, encode_png(img, bit_depth));
}

ImageF read_image(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".pfm" || ext == ".PFM") return read_pfm(path);
  if (ext == ".png" || ext == ".PNG") return read_png(path);
  throw ContractError("unsupported image extension '" + ext + "' for " + path.string());
}

Mask read_mask(const std::filesystem::path& path) { return Mask::from_image(read_image(path)); }

void write_mask(const std::filesystem::path& path, const Mask& mask) { write_png(path, mask.to_image(), 8); }

}  // namespace relight
