#include <gtest/gtest.h>

#include "helpers.hpp"
#include "toolsup/base64.hpp"
#include "toolsup/error.hpp"
#include "toolsup/font.hpp"
#include "toolsup/png.hpp"
#include "toolsup/raster.hpp"

namespace toolsup::raster {
namespace {

using testing::random_image;

TEST(Palette, NamesRoundTrip) {
  for (const char* name : {"red", "blue", "green", "yellow", "purple", "black", "white", "orange", "cyan",
                           "magenta"}) {
    auto c = color_from_name(name);
    ASSERT_TRUE(c) << name;
    EXPECT_EQ(color_name(*c), name);
  }
  EXPECT_FALSE(color_from_name("Red"));
  EXPECT_FALSE(color_from_name("chartreuse"));
  EXPECT_EQ(color_name({1, 2, 3}), "");
}

TEST(BBox, HalfOpenArea) {
  BBox b{2, 3, 5, 7};
  EXPECT_EQ(b.width(), 3);
  EXPECT_EQ(b.height(), 4);
  EXPECT_EQ(b.area(), 12);
  EXPECT_TRUE((BBox{4, 4, 4, 9}).empty());
  EXPECT_EQ(b.intersect({4, 0, 10, 5}), (BBox{4, 3, 5, 5}));
  EXPECT_TRUE(b.intersect({10, 10, 20, 20}).empty());
}

TEST(BBox, ClampedToImage) {
  EXPECT_EQ((BBox{-5, -5, 20, 8}).clamped(10, 10), (BBox{0, 0, 10, 8}));
  EXPECT_FALSE((BBox{10, 0, 20, 5}).clamped(10, 10));
  EXPECT_FALSE((BBox{3, 3, 3, 8}).clamped(10, 10));
}

TEST(BBox, FromCoordsRoundsAndOrders) {
  EXPECT_EQ(box_from_coords(10.4, 20.6, 3.5, 1.49), (BBox{4, 1, 10, 21}));
  EXPECT_EQ(box_from_coords(-2.5, 0, 2.5, 1), (BBox{-3, 0, 3, 1}));
}

TEST(Zoom, OutputSizeFollowsScaleCap) {
  EXPECT_EQ(zoom_target_edge(100, kZoomMaxEdge), 400);
  EXPECT_EQ(zoom_target_edge(300, kZoomMaxEdge), 768);
  EXPECT_EQ(zoom_output_size(100, 50, kZoomMaxEdge), std::make_pair(400, 200));
  EXPECT_EQ(zoom_output_size(400, 300, kZoomMaxEdge), std::make_pair(768, 576));
  EXPECT_EQ(zoom_output_size(1000, 1, kZoomMaxEdge), std::make_pair(768, 1));
}

TEST(Zoom, CropResizeClampsAndScales) {
  Rng rng(1);
  Image img = random_image(rng, 40, 30);
  Image out = crop_resize(img, {-10, -10, 10, 5});
  EXPECT_EQ(out.width(), 40);
  EXPECT_EQ(out.height(), 20);
  EXPECT_THROW(crop_resize(img, {50, 0, 60, 10}), Error);
  try {
    crop_resize(img, {5, 5, 5, 20});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyRegion);
  }
}

TEST(Zoom, CropCopiesPixels) {
  Rng rng(2);
  Image img = random_image(rng, 12, 9);
  Image c = crop(img, {3, 2, 8, 6});
  ASSERT_EQ(c.width(), 5);
  ASSERT_EQ(c.height(), 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 5; ++x) EXPECT_EQ(c.at(x, y), img.at(x + 3, y + 2));
}

TEST(Resize, IdentitySizeIsExact) {
  Rng rng(3);
  Image img = random_image(rng, 17, 11);
  EXPECT_EQ(resize_bilinear(img, 17, 11), img);
}

TEST(Resize, UniformImageStaysUniform) {
  Image img(7, 5, palette::orange);
  Image out = resize_bilinear(img, 29, 13);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) ASSERT_EQ(out.at(x, y), palette::orange);
}

TEST(Rotate, QuarterTurnIsClockwise) {
  Image img(3, 2);
  img.set(0, 0, palette::red);
  Image r = rotate_quarter(img, 1);
  ASSERT_EQ(r.width(), 2);
  ASSERT_EQ(r.height(), 3);
  EXPECT_EQ(r.at(1, 0), palette::red);
  EXPECT_EQ(rotate_quarter(img, 4), img);
  EXPECT_EQ(rotate_quarter(img, -1), rotate_quarter(img, 3));
}

TEST(Rotate, FourQuarterTurnsIsIdentity) {
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    Image img = random_image(rng, static_cast<int>(rng.uniform_int(1, 16)), static_cast<int>(rng.uniform_int(1, 16)));
    Image r = img;
    for (int k = 0; k < 4; ++k) r = rotate_quarter(r, 1);
    EXPECT_EQ(r, img);
  }
}

TEST(Rotate, ArbitraryExpandsCanvasWithWhite) {
  Image img(40, 20, palette::black);
  const auto [w, h] = rotated_extent(40, 20, 45);
  EXPECT_EQ(w, 43);
  EXPECT_EQ(h, 43);
  Image r = rotate_arbitrary(img, 45);
  EXPECT_EQ(r.width(), w);
  EXPECT_EQ(r.height(), h);
  EXPECT_EQ(r.at(0, 0), palette::white);
  EXPECT_EQ(r.at(w / 2, h / 2), palette::black);
  EXPECT_EQ(rotate_arbitrary(img, 90), rotate_quarter(img, 1));
  EXPECT_EQ(rotate_arbitrary(img, -90), rotate_quarter(img, 3));
  EXPECT_EQ(rotated_extent(40, 20, -45), rotated_extent(40, 20, 45));
  EXPECT_EQ(rotated_extent(40, 20, 90), std::make_pair(20, 40));
}

TEST(Flip, InvolutionAndDirection) {
  Rng rng(5);
  Image img = random_image(rng, 9, 6);
  EXPECT_EQ(flip(flip(img, FlipDirection::Horizontal), FlipDirection::Horizontal), img);
  EXPECT_EQ(flip(flip(img, FlipDirection::Vertical), FlipDirection::Vertical), img);
  EXPECT_EQ(flip(img, FlipDirection::Horizontal).at(8, 2), img.at(0, 2));
  EXPECT_EQ(flip(img, FlipDirection::Vertical).at(3, 5), img.at(3, 0));
}

TEST(Draw, HorizontalLineThicknessAndClamp) {
  Image img(20, 10);
  auto r = draw_hline(img, 4, palette::blue, 3, LineStyle::Solid);
  EXPECT_FALSE(r.clamped);
  for (int x = 0; x < 20; ++x) {
    EXPECT_EQ(r.image.at(x, 2), palette::white);
    EXPECT_EQ(r.image.at(x, 3), palette::blue);
    EXPECT_EQ(r.image.at(x, 5), palette::blue);
    EXPECT_EQ(r.image.at(x, 6), palette::white);
  }
  auto c = draw_hline(img, 50, palette::blue, 1, LineStyle::Solid);
  EXPECT_TRUE(c.clamped);
  EXPECT_EQ(c.image.at(0, 9), palette::blue);
  EXPECT_EQ(img.at(0, 4), palette::white);
}

TEST(Draw, VerticalDashedLine) {
  Image img(10, 32);
  auto r = draw_vline(img, 5, palette::green, 1, LineStyle::Dashed);
  EXPECT_EQ(r.image.at(5, 0), palette::green);
  EXPECT_EQ(r.image.at(5, kDashPeriod), palette::white);
  EXPECT_EQ(r.image.at(5, 2 * kDashPeriod), palette::green);
  EXPECT_EQ(r.image.at(4, 0), palette::white);
  EXPECT_THROW(draw_vline(img, 5, palette::green, 0, LineStyle::Solid), Error);
}

TEST(Draw, MarkerCoversCenterAndClamps) {
  Image img(30, 30);
  for (auto shape : {MarkerShape::Circle, MarkerShape::X, MarkerShape::Star}) {
    auto r = draw_marker(img, 10, 12, shape, 6, palette::purple);
    EXPECT_EQ(r.image.at(10, 12), palette::purple);
    EXPECT_FALSE(r.clamped);
    EXPECT_TRUE(marker_covers(shape, 6, 0, 0));
    EXPECT_FALSE(marker_covers(shape, 6, 7, 0));
  }
  auto c = draw_marker(img, -4, 40, MarkerShape::Circle, 3, palette::red);
  EXPECT_TRUE(c.clamped);
  EXPECT_EQ(c.image.at(0, 29), palette::red);
}

TEST(Png, RoundTripAndDeterministic) {
  Rng rng(6);
  Image img = random_image(rng, 23, 17);
  auto bytes = encode_png(img);
  EXPECT_EQ(decode_png(bytes), img);
  EXPECT_EQ(encode_png(img), bytes);
  EXPECT_THROW(decode_png(std::vector<std::uint8_t>{1, 2, 3, 4}), Error);
}

TEST(Base64, RoundTrip) {
  Rng rng(7);
  for (std::size_t n = 0; n < 40; ++n) {
    std::vector<std::uint8_t> data(n);
    for (auto& b : data) b = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    auto dec = base64_decode(base64_encode(data));
    ASSERT_TRUE(dec);
    EXPECT_EQ(*dec, data);
  }
  EXPECT_EQ(base64_encode(std::vector<std::uint8_t>{'M', 'a'}), "TWE=");
  EXPECT_EQ(base64_decode("TW\nE="), (std::vector<std::uint8_t>{'M', 'a'}));
  EXPECT_FALSE(base64_decode("T*E="));
}

TEST(Font, ExtentAndRendering) {
  auto e = text_extent("AB", 2);
  EXPECT_EQ(e.width, (2 * kGlyphWidth + 1) * 2);
  EXPECT_EQ(e.height, kGlyphHeight * 2);
  EXPECT_TRUE(has_glyph('7'));
  Image img(40, 20);
  draw_text(img, 2, 2, "E", palette::black);
  int dark = 0;
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 40; ++x) dark += img.at(x, y) == palette::black;
  EXPECT_GT(dark, 5);
}

}  // namespace
}  // namespace toolsup::raster
