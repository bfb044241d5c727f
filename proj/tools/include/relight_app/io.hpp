#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "json.hpp"

#include "relight/codec.hpp"
#include "relight/completion.hpp"
#include "relight/olat.hpp"
#include "relight/scribble.hpp"
#include "relight/shading.hpp"

namespace relight::app {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// Shared by the CLI and the service so both emit identical PNG bytes.
inline constexpr int kPngCompression = 1;

std::string fnv1a_hex(std::span<const std::uint8_t> bytes);
std::string file_hash(const std::filesystem::path& path);

// PNG (decoded as sRGB and linearized) or PFM (taken as linear), from bytes
// or a path. Gray expands to RGB; alpha is dropped.
ImageF decode_color(std::span<const std::uint8_t> bytes);
ImageF load_color(const std::filesystem::path& path);

Mask decode_mask(std::span<const std::uint8_t> bytes);
NormalMap decode_normals(std::span<const std::uint8_t> bytes);

bool is_png(std::span<const std::uint8_t> bytes);
bool is_pfm(std::span<const std::uint8_t> bytes);

// Linear RGB to an 8-bit sRGB PNG.
Bytes encode_srgb_png(const ImageF& linear, int compression_level = kPngCompression);

// Linear float images go to .pfm as-is and to .png through the sRGB encode.
void write_color(const std::filesystem::path& path, const ImageF& linear);

void write_json_atomic(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);

// Field-by-field overrides; unknown keys and wrong types throw ContractError.
completion::CompletionParams completion_params_from_json(const json& j, completion::CompletionParams base = {});
json to_json(const completion::CompletionParams& p);
json to_json(const completion::CompletionReport& r);
scribble::SimParams sim_params_from_json(const json& j, scribble::SimParams base = {});
json to_json(const scribble::SimParams& p);

// Scribble raster as horizontal runs [y, x, length, L, a, b]; a run covers
// `length` valid pixels sharing one Lab value. Pixels not covered are invalid.
json encode_scribble_runs(const scribble::ScribbleMap& scr);
scribble::ScribbleMap decode_scribble_runs(const json& j, int width, int height);

// OLAT stack directory: stack.json, light_NNN.pfm, albedo.pfm,
// normals.pfm, subject.png.
void write_stack(const std::filesystem::path& dir, const olat::OlatStack& stack);
olat::OlatStack read_stack(const std::filesystem::path& dir);

}  // namespace relight::app
