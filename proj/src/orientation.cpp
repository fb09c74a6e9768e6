#include "toolsup/orientation.hpp"

#include "toolsup/error.hpp"

namespace toolsup::tools {

namespace {

constexpr std::array<std::string_view, 8> kNames{
    "identity", "r90", "r180", "r270", "hflip", "vflip", "antitranspose", "transpose"};

}  // namespace

// (R^a H^ma)(R^b H^mb) = R^(a +- b) H^(ma xor mb), using H R^b = R^-b H.
Orientation compose(const Orientation& outer, const Orientation& inner) {
  const int turns = outer.mirrored ? outer.quarter_turns - inner.quarter_turns
                                   : outer.quarter_turns + inner.quarter_turns;
  Orientation r = Orientation::rotation(turns);
  r.mirrored = outer.mirrored != inner.mirrored;
  r.non_axis_aligned = outer.non_axis_aligned || inner.non_axis_aligned;
  return r;
}

Orientation inverse(const Orientation& o) {
  // Reflections are involutions; rotations invert by negating the turn count.
  Orientation r = o.mirrored ? o : Orientation::rotation(-o.quarter_turns);
  r.non_axis_aligned = o.non_axis_aligned;
  return r;
}

const std::array<Orientation, 8>& d4_elements() {
  static const std::array<Orientation, 8> elements{
      Orientation::identity(),   Orientation::rotation(1),    Orientation::rotation(2),
      Orientation::rotation(3),  Orientation::hflip(),        Orientation::vflip(),
      Orientation{1, true, false}, Orientation{3, true, false},
  };
  return elements;
}

raster::Image apply_orientation(const Orientation& o, const raster::Image& img) {
  if (o.non_axis_aligned) {
    throw Error(ErrorCode::InvalidArguments, "cannot apply a non-axis-aligned orientation");
  }
  const raster::Image mirrored =
      o.mirrored ? raster::flip(img, raster::FlipDirection::Horizontal) : img;
  return raster::rotate_quarter(mirrored, o.quarter_turns);
}

std::string_view orientation_name(const Orientation& o) {
  if (o.non_axis_aligned) return "non_axis_aligned";
  const auto& all = d4_elements();
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i] == o) return kNames[i];
  }
  return "invalid";
}

std::optional<Orientation> orientation_from_name(std::string_view name) {
  if (name == "none") return Orientation::identity();
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return d4_elements()[i];
  }
  return std::nullopt;
}

}  // namespace toolsup::tools
