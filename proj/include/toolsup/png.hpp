#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "toolsup/raster.hpp"

namespace toolsup::raster {

/// Encodes as 8-bit RGB PNG. Output is a pure function of the pixels, so
/// equal images always produce equal bytes.
std::vector<std::uint8_t> encode_png(const Image& img);

/// Decodes any PNG libpng understands into 8-bit RGB (alpha is composited
/// over white, grey is expanded). Throws Error{Io} on corrupt input.
Image decode_png(std::span<const std::uint8_t> bytes);

Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& img);

}  // namespace toolsup::raster
