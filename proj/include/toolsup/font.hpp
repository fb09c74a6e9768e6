#pragma once

#include <string_view>

#include "toolsup/raster.hpp"

namespace toolsup::raster {

inline constexpr int kGlyphWidth = 5;
inline constexpr int kGlyphHeight = 7;

/// Pixel extent of `text` rendered with the built-in 5x7 font. Glyphs are
/// separated by one column, everything scales by `scale`.
struct TextExtent {
  int width = 0;
  int height = 0;
};

TextExtent text_extent(std::string_view text, int scale = 1);

/// Renders `text` with its top-left corner at (x, y). Lower-case letters are
/// drawn as upper case; characters without a glyph render as blanks.
void draw_text(Image& img, int x, int y, std::string_view text, Rgb color, int scale = 1);

bool has_glyph(char c) noexcept;

}  // namespace toolsup::raster
