#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "toolsup/raster.hpp"

namespace toolsup::tools {

/// Element of the dihedral group D4: an optional horizontal mirror followed
/// by `quarter_turns` clockwise quarter rotations. `non_axis_aligned` marks
/// images that went through an arbitrary-angle rotation; such an orientation
/// never equals any axis-aligned one.
struct Orientation {
  int quarter_turns = 0;
  bool mirrored = false;
  bool non_axis_aligned = false;

  static Orientation identity() { return {}; }
  static Orientation rotation(int k) { return {((k % 4) + 4) % 4, false, false}; }
  static Orientation hflip() { return {0, true, false}; }
  static Orientation vflip() { return {2, true, false}; }

  friend bool operator==(const Orientation&, const Orientation&) = default;
};

/// outer o inner: apply `inner` first, then `outer`.
Orientation compose(const Orientation& outer, const Orientation& inner);
Orientation inverse(const Orientation& o);

/// The eight axis-aligned elements in a fixed order:
/// identity, r90, r180, r270, hflip, vflip, r90*hflip, r270*hflip.
const std::array<Orientation, 8>& d4_elements();

/// Pixel-exact transform of an image by an axis-aligned element.
raster::Image apply_orientation(const Orientation& o, const raster::Image& img);

/// Stable names: "identity", "r90", "r180", "r270", "hflip", "vflip",
/// "antitranspose" (r90*hflip), "transpose" (r270*hflip).
std::string_view orientation_name(const Orientation& o);
std::optional<Orientation> orientation_from_name(std::string_view name);

}  // namespace toolsup::tools
