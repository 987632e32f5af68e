#pragma once

#include "layerpeel/bitmask.hpp"
#include "layerpeel/raster.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace layerpeel {

/// 8-bit RGBA, non-interlaced. Output bytes depend only on the pixels.
std::vector<std::uint8_t> encode_png(const RasterImage& img);
/// Any PNG color type is converted to 8-bit RGBA.
RasterImage decode_png(std::span<const std::uint8_t> bytes);

void write_png(const std::filesystem::path& path, const RasterImage& img);
RasterImage read_png(const std::filesystem::path& path);

/// Masks are stored as 1-bit grayscale (set = white).
std::vector<std::uint8_t> encode_mask_png(const BitMask& mask);
BitMask decode_mask_png(std::span<const std::uint8_t> bytes);
void write_mask_png(const std::filesystem::path& path, const BitMask& mask);
BitMask read_mask_png(const std::filesystem::path& path);

bool looks_like_png(std::span<const std::uint8_t> bytes);

} // namespace layerpeel
