#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rainforge/image.h"

namespace rainforge {

// Loads an 8-bit PNG or binary PPM (P6, maxval 255). Byte value v becomes
// v / 255. Gray PNGs load as one channel; alpha is dropped.
Image load_image(const std::filesystem::path& path);

// Writes by extension (.png or .ppm). Values are clamped to [0,1] and
// quantized with round(v * 255).
void save_image(const Image& img, const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const Image& img);
Image decode_png(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_ppm(const Image& img);
Image decode_ppm(std::span<const std::uint8_t> bytes);

// Gray PNG mask: nonzero pixels are included.
RegionMask load_mask(const std::filesystem::path& path);

// .dfield: uint32 width, uint32 height, then width*height (dx, dy) float32
// pairs, row-major, all little-endian.
void save_field(const DisplacementField& field, const std::filesystem::path& path);
DisplacementField load_field(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_field(const DisplacementField& field);
DisplacementField decode_field(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace rainforge
