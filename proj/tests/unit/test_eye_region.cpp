#include <doctest.h>

#include "ocugaze/error.hpp"
#include "ocugaze/eye_region.hpp"

using namespace ocugaze;

TEST_SUITE("eye_region") {
  TEST_CASE("band proportions") {
    const FaceBox face{0, 0, 100, 100, 3};
    const auto left = eye_band(face, EyeSide::left);
    CHECK(left == Rect{55, 25, 32, 20});
    const auto right = eye_band(face, EyeSide::right);
    CHECK(right == Rect{13, 25, 32, 20});

    const FaceBox moved{40, 30, 200, 200, 3};
    CHECK(eye_band(moved, EyeSide::left) == Rect{150, 80, 64, 40});
  }

  TEST_CASE("extraction crops the band") {
    GrayFrame frame(100, 100);
    for (int y = 0; y < 100; ++y)
      for (int x = 0; x < 100; ++x) frame.at(x, y) = static_cast<std::uint8_t>(x + y);
    const auto roi = extract_eye_roi(frame, {0, 0, 100, 100, 3}, EyeSide::left);
    CHECK(roi.crop.width() == 32);
    CHECK(roi.crop.height() == 20);
    CHECK(roi.origin == Point{55, 25});
    CHECK(roi.crop.at(0, 0) == 80);
    CHECK(roi.crop.at(31, 19) == 86 + 44);
    CHECK(roi.side == EyeSide::left);
    CHECK(roi.mean_intensity == doctest::Approx(roi.crop.mean()));
  }

  TEST_CASE("clipping at the frame edge") {
    const GrayFrame frame(100, 100, 50);
    const auto roi = extract_eye_roi(frame, {40, -10, 100, 100, 3}, EyeSide::left);
    CHECK(roi.crop.width() == 100 - 95);
    CHECK(roi.crop.height() == 20);
    CHECK(roi.origin == Point{95, 15});

    try {
      extract_eye_roi(frame, {200, 200, 100, 100, 3}, EyeSide::left);
      FAIL("expected extraction error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::extraction);
    }
    try {
      extract_eye_roi(frame, {0, 0, 2, 2, 3}, EyeSide::left);
      FAIL("expected extraction error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::extraction);
    }
  }

  TEST_CASE("contrast stretch") {
    GrayFrame g(4, 1);
    g.at(0, 0) = 40;
    g.at(1, 0) = 60;
    g.at(2, 0) = 100;
    g.at(3, 0) = 120;
    const auto s = contrast_stretch(g);
    CHECK(s.at(0, 0) == 0);
    CHECK(s.at(1, 0) == 64);
    CHECK(s.at(2, 0) == 191);
    CHECK(s.at(3, 0) == 255);
    const GrayFrame flat(3, 3, 17);
    CHECK(contrast_stretch(flat) == flat);
  }

  TEST_CASE("normalization stretches dark ROIs and downscales to 24 rows") {
    GrayFrame dark(64, 48);
    for (int y = 0; y < 48; ++y)
      for (int x = 0; x < 64; ++x) dark.at(x, y) = static_cast<std::uint8_t>(x < 32 ? 40 : 100);
    EyeRoi roi;
    roi.crop = dark;
    roi.mean_intensity = dark.mean();
    const auto n = normalize_roi(roi);
    CHECK(n.contrast_stretched);
    CHECK(n.crop.height() == 24);
    CHECK(n.crop.width() == 32);
    CHECK(n.crop.at(0, 0) == 0);
    CHECK(n.crop.at(31, 23) == 255);
    CHECK(n.scale_factor == doctest::Approx(0.5));
    CHECK_FALSE(n.downscale_skipped);
    CHECK(n.mean_intensity == doctest::Approx(n.crop.mean()));

    EyeRoi bright;
    bright.crop = GrayFrame(64, 48, 150);
    const auto b = normalize_roi(bright);
    CHECK_FALSE(b.contrast_stretched);
    CHECK(b.crop == GrayFrame(32, 24, 150));
  }

  TEST_CASE("short ROIs skip the downscale") {
    EyeRoi roi;
    roi.crop = GrayFrame(30, 16, 150);
    const auto n = normalize_roi(roi);
    CHECK(n.downscale_skipped);
    CHECK(n.crop == roi.crop);
    CHECK(n.scale_factor == doctest::Approx(1.0));
  }

  TEST_CASE("eye side names") {
    CHECK(parse_eye_side("left") == EyeSide::left);
    CHECK(to_string(EyeSide::right) == "right");
    CHECK_THROWS_AS(parse_eye_side("middle"), Error);
  }
}
