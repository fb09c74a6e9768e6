#pragma once

#include <string_view>

namespace toolsup {

enum class PrimitiveKind { XLine, YLine, Point };

/// A drawable supervision target in pixel coordinates. An x-line is a
/// vertical line at column `x` (it reads an x value), a y-line a horizontal
/// line at row `y`; a point uses both.
struct Primitive {
  PrimitiveKind kind = PrimitiveKind::Point;
  double x = 0.0;
  double y = 0.0;

  static Primitive x_line(double column) { return {PrimitiveKind::XLine, column, 0.0}; }
  static Primitive y_line(double row) { return {PrimitiveKind::YLine, 0.0, row}; }
  static Primitive point(double column, double row) { return {PrimitiveKind::Point, column, row}; }

  friend bool operator==(const Primitive&, const Primitive&) = default;
};

inline std::string_view to_string(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::XLine: return "x_line";
    case PrimitiveKind::YLine: return "y_line";
    case PrimitiveKind::Point: return "point";
  }
  return "point";
}

}  // namespace toolsup
