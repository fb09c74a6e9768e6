#pragma once

#include <cstdint>

#include "toolsup/raster.hpp"
#include "toolsup/rng.hpp"

namespace toolsup::testing {

inline raster::Image random_image(Rng& rng, int w, int h) {
  raster::Image img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.set(x, y, {static_cast<std::uint8_t>(rng.uniform_int(0, 255)),
                     static_cast<std::uint8_t>(rng.uniform_int(0, 255)),
                     static_cast<std::uint8_t>(rng.uniform_int(0, 255))});
    }
  }
  return img;
}

}  // namespace toolsup::testing
