#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace toolsup::raster {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

namespace palette {
inline constexpr Rgb red{230, 25, 25};
inline constexpr Rgb blue{30, 70, 220};
inline constexpr Rgb green{20, 160, 60};
inline constexpr Rgb yellow{245, 200, 0};
inline constexpr Rgb purple{128, 40, 170};
inline constexpr Rgb black{0, 0, 0};
inline constexpr Rgb white{255, 255, 255};
inline constexpr Rgb orange{245, 130, 20};
inline constexpr Rgb cyan{0, 190, 210};
inline constexpr Rgb magenta{220, 30, 170};
}  // namespace palette

/// Looks up one of the named palette colors. Names are matched exactly
/// (lower case), unknown names yield nullopt.
std::optional<Rgb> color_from_name(std::string_view name);

/// Inverse of color_from_name; empty for colors outside the palette.
std::string_view color_name(Rgb color);

/// Owned 8-bit RGB raster, row-major, three bytes per pixel.
class Image {
 public:
  Image(int width, int height, Rgb fill = palette::white);
  Image(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  Rgb at(int x, int y) const noexcept {
    const auto* p = &pixels_[offset(x, y)];
    return {p[0], p[1], p[2]};
  }

  void set(int x, int y, Rgb c) noexcept {
    auto* p = &pixels_[offset(x, y)];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  std::span<const std::uint8_t> bytes() const noexcept { return pixels_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t offset(int x, int y) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) *
           3;
  }

  int width_;
  int height_;
  std::vector<std::uint8_t> pixels_;
};

/// Half-open pixel box [x1,x2) x [y1,y2).
struct BBox {
  int x1 = 0;
  int y1 = 0;
  int x2 = 0;
  int y2 = 0;

  int width() const noexcept { return x2 > x1 ? x2 - x1 : 0; }
  int height() const noexcept { return y2 > y1 ? y2 - y1 : 0; }
  std::int64_t area() const noexcept {
    return static_cast<std::int64_t>(width()) * height();
  }
  bool empty() const noexcept { return area() == 0; }

  BBox intersect(const BBox& o) const noexcept;

  /// Clamps to [0,W]x[0,H]; nullopt when nothing of positive area remains.
  std::optional<BBox> clamped(int w, int h) const noexcept;

  friend bool operator==(const BBox&, const BBox&) = default;
};

/// Builds a box from real-valued corner coordinates: corners are rounded to
/// the nearest integer and reordered so that x1 <= x2 and y1 <= y2.
BBox box_from_coords(double x1, double y1, double x2, double y2);

enum class FlipDirection { Horizontal, Vertical };
enum class LineStyle { Solid, Dashed };
enum class MarkerShape { Circle, X, Star };

/// Result of a drawing tool. `clamped` is set when the requested coordinate
/// fell outside the image and was pulled back to the nearest edge.
struct DrawResult {
  Image image;
  bool clamped = false;
};

inline constexpr int kZoomMaxEdge = 768;
inline constexpr int kZoomMaxScale = 4;
inline constexpr int kDashPeriod = 8;

/// Long edge a crop of `crop_long_edge` pixels is resized to.
int zoom_target_edge(int crop_long_edge, int out_max_edge);

/// Output size crop_resize produces for a clamped crop of the given size.
std::pair<int, int> zoom_output_size(int crop_width, int crop_height, int out_max_edge);

Image crop(const Image& img, const BBox& box);
Image resize_bilinear(const Image& img, int width, int height);

/// Crops to `box` (clamped to the image) and rescales so the longer edge is
/// min(out_max_edge, 4 x crop long edge), keeping aspect ratio.
/// Throws Error{EmptyRegion} when the clamped box is empty.
Image crop_resize(const Image& img, const BBox& box, int out_max_edge = kZoomMaxEdge);

/// Exact clockwise rotation by k quarter turns (k reduced mod 4).
Image rotate_quarter(const Image& img, int k);

/// Canvas size of an image rotated by `angle_deg`.
std::pair<int, int> rotated_extent(int width, int height, double angle_deg);

/// Clockwise rotation by an integer angle in degrees. Multiples of 90 are
/// exact; other angles expand the canvas, fill it white and sample bilinearly.
Image rotate_arbitrary(const Image& img, int angle_deg);

Image flip(const Image& img, FlipDirection direction);

DrawResult draw_hline(const Image& img, int row, Rgb color, int thickness, LineStyle style);
DrawResult draw_vline(const Image& img, int col, Rgb color, int thickness, LineStyle style);
DrawResult draw_marker(const Image& img, int col, int row, MarkerShape shape, int size,
                       Rgb color);

// In-place primitives used by the chart renderer.
void fill_rect(Image& img, const BBox& box, Rgb color);
void draw_segment(Image& img, int x0, int y0, int x1, int y1, Rgb color, int thickness = 1);
void stamp_marker(Image& img, int col, int row, MarkerShape shape, int size, Rgb color);

/// True when (dx,dy) relative to the marker center is covered by the shape.
bool marker_covers(MarkerShape shape, int size, int dx, int dy) noexcept;

}  // namespace toolsup::raster
