#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "relight/image.hpp"

namespace relight {

using Bytes = std::vector<std::uint8_t>;

// PNG, 8 or 16 bits per sample. Gray (+alpha) decodes to a scalar image,
// RGB(A) to an sRGB-tagged image; samples are normalized to [0, 1]. Encoding
// quantizes each sample as round(clamp(v, 0, 1) * max) without any transfer
// function, so callers encode linear data first if they want sRGB output.
ImageF decode_png(std::span<const std::uint8_t> bytes);
Bytes encode_png(const ImageF& img, int bit_depth = 8, int compression_level = 6);

// Portable float map. "PF" (3 channels) and "Pf" (1 channel), rows stored
// bottom-to-top. Little-endian on write; both byte orders on read.
ImageF decode_pfm(std::span<const std::uint8_t> bytes);
Bytes encode_pfm(const ImageF& img);

Bytes read_file(const std::filesystem::path& path);
// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

ImageF read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const ImageF& img, int bit_depth = 8);
ImageF read_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const ImageF& img);

// Dispatch on extension: .png or .pfm.
ImageF read_image(const std::filesystem::path& path);

Mask read_mask(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const Mask& mask);

}  // namespace relight
