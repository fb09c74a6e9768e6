#include "toolsup/raster.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "toolsup/error.hpp"

namespace toolsup::raster {

namespace {

struct NamedColor {
  std::string_view name;
  Rgb color;
};

constexpr std::array<NamedColor, 10> kPalette{{
    {"red", palette::red},
    {"blue", palette::blue},
    {"green", palette::green},
    {"yellow", palette::yellow},
    {"purple", palette::purple},
    {"black", palette::black},
    {"white", palette::white},
    {"orange", palette::orange},
    {"cyan", palette::cyan},
    {"magenta", palette::magenta},
}};

int mod4(int k) { return ((k % 4) + 4) % 4; }

std::uint8_t to_channel(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

// Bilinear sample at continuous pixel-center coordinates. Neighbours outside
// the image take `outside` when given, otherwise the coordinate is clamped.
Rgb sample_bilinear(const Image& img, double sx, double sy, std::optional<Rgb> outside) {
  if (!outside) {
    sx = std::clamp(sx, 0.0, static_cast<double>(img.width() - 1));
    sy = std::clamp(sy, 0.0, static_cast<double>(img.height() - 1));
  }
  const double fx = std::floor(sx);
  const double fy = std::floor(sy);
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const double ax = sx - fx;
  const double ay = sy - fy;

  auto fetch = [&](int x, int y) -> Rgb {
    if (img.contains(x, y)) return img.at(x, y);
    if (outside) return *outside;
    return img.at(std::clamp(x, 0, img.width() - 1), std::clamp(y, 0, img.height() - 1));
  };
  const Rgb p00 = fetch(x0, y0);
  const Rgb p10 = fetch(x0 + 1, y0);
  const Rgb p01 = fetch(x0, y0 + 1);
  const Rgb p11 = fetch(x0 + 1, y0 + 1);

  auto mix = [&](std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
    const double top = a * (1.0 - ax) + b * ax;
    const double bottom = c * (1.0 - ax) + d * ax;
    return to_channel(top * (1.0 - ay) + bottom * ay);
  };
  return {mix(p00.r, p10.r, p01.r, p11.r), mix(p00.g, p10.g, p01.g, p11.g),
          mix(p00.b, p10.b, p01.b, p11.b)};
}

void require_positive(int value, const char* what) {
  if (value < 1) {
    throw Error(ErrorCode::InvalidArguments, std::string(what) + " must be >= 1");
  }
}

}  // namespace

std::optional<Rgb> color_from_name(std::string_view name) {
  for (const auto& entry : kPalette) {
    if (entry.name == name) return entry.color;
  }
  return std::nullopt;
}

std::string_view color_name(Rgb color) {
  for (const auto& entry : kPalette) {
    if (entry.color == color) return entry.name;
  }
  return {};
}

Image::Image(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::InvalidArguments, "image dimensions must be positive");
  }
  pixels_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
  for (std::size_t i = 0; i < pixels_.size(); i += 3) {
    pixels_[i] = fill.r;
    pixels_[i + 1] = fill.g;
    pixels_[i + 2] = fill.b;
  }
}

Image::Image(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::InvalidArguments, "image dimensions must be positive");
  }
  if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3) {
    throw Error(ErrorCode::InvalidArguments, "pixel buffer length must be 3*W*H");
  }
}

BBox BBox::intersect(const BBox& o) const noexcept {
  BBox r{std::max(x1, o.x1), std::max(y1, o.y1), std::min(x2, o.x2), std::min(y2, o.y2)};
  if (r.x2 < r.x1) r.x2 = r.x1;
  if (r.y2 < r.y1) r.y2 = r.y1;
  return r;
}

std::optional<BBox> BBox::clamped(int w, int h) const noexcept {
  BBox r{std::clamp(x1, 0, w), std::clamp(y1, 0, h), std::clamp(x2, 0, w), std::clamp(y2, 0, h)};
  if (r.x2 <= r.x1 || r.y2 <= r.y1) return std::nullopt;
  return r;
}

BBox box_from_coords(double x1, double y1, double x2, double y2) {
  auto round = [](double v) {
    return static_cast<int>(std::clamp(std::lround(v), -(1L << 30), 1L << 30));
  };
  const int a = round(x1), b = round(y1), c = round(x2), d = round(y2);
  return {std::min(a, c), std::min(b, d), std::max(a, c), std::max(b, d)};
}

int zoom_target_edge(int crop_long_edge, int out_max_edge) {
  return std::min(out_max_edge, kZoomMaxScale * crop_long_edge);
}

std::pair<int, int> zoom_output_size(int crop_width, int crop_height, int out_max_edge) {
  const int long_edge = std::max(crop_width, crop_height);
  const double scale = static_cast<double>(zoom_target_edge(long_edge, out_max_edge)) / long_edge;
  return {std::max(1, static_cast<int>(std::lround(crop_width * scale))),
          std::max(1, static_cast<int>(std::lround(crop_height * scale)))};
}

Image crop(const Image& img, const BBox& box) {
  auto region = box.clamped(img.width(), img.height());
  if (!region) throw Error(ErrorCode::EmptyRegion, "crop box has zero area after clamping");
  Image out(region->width(), region->height());
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      out.set(x, y, img.at(region->x1 + x, region->y1 + y));
    }
  }
  return out;
}

Image resize_bilinear(const Image& img, int width, int height) {
  require_positive(width, "width");
  require_positive(height, "height");
  if (width == img.width() && height == img.height()) return img;
  Image out(width, height);
  const double sx = static_cast<double>(img.width()) / width;
  const double sy = static_cast<double>(img.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double src_y = (y + 0.5) * sy - 0.5;
    for (int x = 0; x < width; ++x) {
      const double src_x = (x + 0.5) * sx - 0.5;
      out.set(x, y, sample_bilinear(img, src_x, src_y, std::nullopt));
    }
  }
  return out;
}

Image crop_resize(const Image& img, const BBox& box, int out_max_edge) {
  require_positive(out_max_edge, "out_max_edge");
  Image region = crop(img, box);
  const auto [w, h] = zoom_output_size(region.width(), region.height(), out_max_edge);
  return resize_bilinear(region, w, h);
}

Image rotate_quarter(const Image& img, int k) {
  k = mod4(k);
  const int w = img.width();
  const int h = img.height();
  if (k == 0) return img;
  Image out = (k % 2 == 0) ? Image(w, h) : Image(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Rgb c = img.at(x, y);
      switch (k) {
        case 1: out.set(h - 1 - y, x, c); break;
        case 2: out.set(w - 1 - x, h - 1 - y, c); break;
        default: out.set(y, w - 1 - x, c); break;
      }
    }
  }
  return out;
}

std::pair<int, int> rotated_extent(int width, int height, double angle_deg) {
  const double t = angle_deg * std::numbers::pi / 180.0;
  const double c = std::abs(std::cos(t));
  const double s = std::abs(std::sin(t));
  // The epsilon absorbs cos/sin rounding for exact quarter-turn extents.
  const int w = static_cast<int>(std::ceil(width * c + height * s - 1e-9));
  const int h = static_cast<int>(std::ceil(width * s + height * c - 1e-9));
  return {std::max(w, 1), std::max(h, 1)};
}

Image rotate_arbitrary(const Image& img, int angle_deg) {
  const int normalized = ((angle_deg % 360) + 360) % 360;
  if (normalized % 90 == 0) return rotate_quarter(img, normalized / 90);

  const auto [ow, oh] = rotated_extent(img.width(), img.height(), normalized);
  const double t = normalized * std::numbers::pi / 180.0;
  const double c = std::cos(t);
  const double s = std::sin(t);
  const double icx = img.width() / 2.0;
  const double icy = img.height() / 2.0;
  const double ocx = ow / 2.0;
  const double ocy = oh / 2.0;

  Image out(ow, oh, palette::white);
  for (int v = 0; v < oh; ++v) {
    for (int u = 0; u < ow; ++u) {
      const double du = u + 0.5 - ocx;
      const double dv = v + 0.5 - ocy;
      // inverse of the clockwise (y-down) rotation
      const double sx = du * c + dv * s + icx - 0.5;
      const double sy = -du * s + dv * c + icy - 0.5;
      if (sx < -1.0 || sy < -1.0 || sx > img.width() || sy > img.height()) continue;
      out.set(u, v, sample_bilinear(img, sx, sy, palette::white));
    }
  }
  return out;
}

Image flip(const Image& img, FlipDirection direction) {
  const int w = img.width();
  const int h = img.height();
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (direction == FlipDirection::Horizontal) {
        out.set(w - 1 - x, y, img.at(x, y));
      } else {
        out.set(x, h - 1 - y, img.at(x, y));
      }
    }
  }
  return out;
}

DrawResult draw_hline(const Image& img, int row, Rgb color, int thickness, LineStyle style) {
  require_positive(thickness, "thickness");
  DrawResult result{img, false};
  const int r = std::clamp(row, 0, img.height() - 1);
  result.clamped = r != row;
  const int first = r - (thickness - 1) / 2;
  for (int y = std::max(first, 0); y < std::min(first + thickness, img.height()); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (style == LineStyle::Dashed && (x / kDashPeriod) % 2 != 0) continue;
      result.image.set(x, y, color);
    }
  }
  return result;
}

DrawResult draw_vline(const Image& img, int col, Rgb color, int thickness, LineStyle style) {
  require_positive(thickness, "thickness");
  DrawResult result{img, false};
  const int c = std::clamp(col, 0, img.width() - 1);
  result.clamped = c != col;
  const int first = c - (thickness - 1) / 2;
  for (int x = std::max(first, 0); x < std::min(first + thickness, img.width()); ++x) {
    for (int y = 0; y < img.height(); ++y) {
      if (style == LineStyle::Dashed && (y / kDashPeriod) % 2 != 0) continue;
      result.image.set(x, y, color);
    }
  }
  return result;
}

bool marker_covers(MarkerShape shape, int size, int dx, int dy) noexcept {
  const int ax = std::abs(dx);
  const int ay = std::abs(dy);
  if (ax > size || ay > size) return false;
  const int half = size / 5;
  switch (shape) {
    case MarkerShape::Circle:
      return ax * ax + ay * ay <= size * size;
    case MarkerShape::X:
      return std::abs(ax - ay) <= half;
    case MarkerShape::Star:
      return std::abs(ax - ay) <= half || ax <= half || ay <= half;
  }
  return false;
}

void stamp_marker(Image& img, int col, int row, MarkerShape shape, int size, Rgb color) {
  for (int dy = -size; dy <= size; ++dy) {
    for (int dx = -size; dx <= size; ++dx) {
      if (!marker_covers(shape, size, dx, dy)) continue;
      if (img.contains(col + dx, row + dy)) img.set(col + dx, row + dy, color);
    }
  }
}

DrawResult draw_marker(const Image& img, int col, int row, MarkerShape shape, int size,
                       Rgb color) {
  require_positive(size, "size");
  DrawResult result{img, false};
  const int c = std::clamp(col, 0, img.width() - 1);
  const int r = std::clamp(row, 0, img.height() - 1);
  result.clamped = c != col || r != row;
  stamp_marker(result.image, c, r, shape, size, color);
  return result;
}

void fill_rect(Image& img, const BBox& box, Rgb color) {
  auto region = box.clamped(img.width(), img.height());
  if (!region) return;
  for (int y = region->y1; y < region->y2; ++y) {
    for (int x = region->x1; x < region->x2; ++x) img.set(x, y, color);
  }
}

void draw_segment(Image& img, int x0, int y0, int x1, int y1, Rgb color, int thickness) {
  // Bresenham with a square brush.
  const int dx = std::abs(x1 - x0);
  const int dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1;
  const int sy = y0 < y1 ? 1 : -1;
  const int lo = -(thickness - 1) / 2;
  const int hi = lo + thickness;
  int err = dx + dy;
  while (true) {
    for (int oy = lo; oy < hi; ++oy) {
      for (int ox = lo; ox < hi; ++ox) {
        if (img.contains(x0 + ox, y0 + oy)) img.set(x0 + ox, y0 + oy, color);
      }
    }
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

}  // namespace toolsup::raster
