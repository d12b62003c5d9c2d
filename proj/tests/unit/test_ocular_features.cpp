#include <doctest.h>

#include <cmath>
#include <random>

#include "ocugaze/error.hpp"
#include "ocugaze/ocular_features.hpp"
#include "ocugaze/synthetic_face.hpp"

using namespace ocugaze;

namespace {

EyelidLandmarks make_landmarks(double half_width, double half_height) {
  EyelidLandmarks lm;
  lm.p(1) = {-half_width, 0};
  lm.p(4) = {half_width, 0};
  lm.p(2) = {-half_width / 3, -half_height};
  lm.p(6) = {-half_width / 3, half_height};
  lm.p(3) = {half_width / 3, -half_height};
  lm.p(5) = {half_width / 3, half_height};
  return lm;
}

EyelidLandmarks transformed(const EyelidLandmarks& lm, double angle, double scale, Point shift) {
  EyelidLandmarks out;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  for (int i = 1; i <= 6; ++i) {
    const auto& p = lm.p(i);
    out.p(i) = {scale * (c * p.x - s * p.y) + shift.x, scale * (s * p.x + c * p.y) + shift.y};
  }
  return out;
}

GrayFrame filled_ellipse_mask(int w, int h, double cx, double cy, double ax, double ay) {
  GrayFrame m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double u = (x - cx) / ax;
      const double v = (y - cy) / ay;
      if (u * u + v * v <= 1.0) m.at(x, y) = 255;
    }
  return m;
}

}  // namespace

TEST_SUITE("ocular_features") {
  TEST_CASE("class labels") {
    for (int c = 1; c <= kClassCount; ++c) CHECK(label(gaze_class(c)) == c);
    CHECK_THROWS_AS(gaze_class(0), Error);
    CHECK_THROWS_AS(gaze_class(10), Error);
    CHECK(direction_name(GazeClass::north_west) == "north-west");
    CHECK(grid_cell(GazeClass::center) == std::pair{1, 1});
    CHECK(grid_cell(GazeClass::south_west) == std::pair{2, 0});
  }

  TEST_CASE("iris kernel is a normalized binomial") {
    const auto k = iris_kernel();
    double sum = 0.0;
    for (double v : k.weights()) sum += v;
    CHECK(sum == doctest::Approx(1.0));
    CHECK(k.at(2, 2) == doctest::Approx(0.16));
    CHECK(k.at(0, 0) == doctest::Approx(0.01));
    CHECK(k.at(0, 2) == k.at(2, 0));
  }

  TEST_CASE("candidate budget follows darkness") {
    CHECK(candidate_budget(230) == 1);
    CHECK(candidate_budget(255) == 1);
    CHECK(candidate_budget(40) == 5);
    CHECK(candidate_budget(0) == 5);
    int previous = 6;
    for (int m = 0; m <= 255; ++m) {
      const int b = candidate_budget(m);
      CHECK(b >= 1);
      CHECK(b <= 5);
      CHECK(b <= previous);
      previous = b;
    }
  }

  TEST_CASE("iris on a rendered patch") {
    for (double dx : {-6.0, 0.0, 5.0}) {
      for (double dy : {-1.0, 0.0, 1.5}) {
        EyePatch p;
        p.disc_x = 19.5 + dx;
        p.disc_y = 11.5 + dy;
        const auto img = render_eye_patch(p);
        const auto iris = locate_iris(img, eye_mask(img));
        CHECK(std::abs(iris.x - p.disc_x) <= 1.0);
        CHECK(std::abs(iris.y - p.disc_y) <= 1.0);
      }
    }
  }

  TEST_CASE("winning response is the global maximum") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> pos(-7.0, 7.0);
    for (int n = 0; n < 30; ++n) {
      EyePatch p;
      p.disc_x = 19.5 + pos(rng);
      p.disc_y = 11.5 + pos(rng) / 4.0;
      const auto img = gaussian_blur(render_eye_patch(p), 0.8);
      const auto mask = eye_mask(img);
      const auto response = iris_response(img, mask);
      double best = 0.0;
      for (double v : response.values()) best = std::max(best, v);
      const auto iris = locate_iris(img, mask);
      CHECK(iris.response == best);
      CHECK(response.at(iris.pixel_x, iris.pixel_y) == best);
    }
  }

  TEST_CASE("flat plateau resolves to its centre") {
    GrayFrame crop(21, 21, 200);
    GrayFrame mask(21, 21);
    for (int y = 7; y <= 13; ++y)
      for (int x = 6; x <= 14; ++x) {
        crop.at(x, y) = 10;
        mask.at(x, y) = 255;
      }
    const auto iris = locate_iris(crop, mask);
    CHECK(iris.x == doctest::Approx(10.0));
    CHECK(iris.y == doctest::Approx(10.0));
    CHECK(iris.pixel_x == 10);
    CHECK(iris.pixel_y == 10);
  }

  TEST_CASE("localization failures") {
    const GrayFrame flat(20, 20, 128);
    try {
      locate_iris(flat, GrayFrame(20, 20));
      FAIL("expected localization error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::localization);
    }
    CHECK_THROWS_AS(locate_iris(flat, GrayFrame(10, 10)), Error);
  }

  TEST_CASE("eye mask clears border-touching blobs") {
    GrayFrame crop(30, 20, 200);
    for (int y = 0; y < 20; ++y) crop.at(0, y) = 0;
    for (int y = 8; y <= 11; ++y)
      for (int x = 13; x <= 16; ++x) crop.at(x, y) = 0;
    const auto mask = eye_mask(crop);
    CHECK(mask.at(0, 10) == 0);
    CHECK(mask.at(14, 9) == 255);
  }

  TEST_CASE("landmarks on an ellipse") {
    const auto mask = filled_ellipse_mask(40, 24, 20, 12, 12, 6);
    const auto lm = eyelid_landmarks(mask);
    CHECK(lm.p(1).x == 8);
    CHECK(lm.p(4).x == 32);
    CHECK(lm.p(1).y == 12);
    CHECK(lm.p(2).x == lm.p(6).x);
    CHECK(lm.p(3).x == lm.p(5).x);
    CHECK(lm.p(2).y < lm.p(6).y);
    CHECK(lm.p(2).x == 16);
    CHECK(lm.p(3).x == 24);
    const double ear = eye_aspect_ratio(lm);
    // Chord at a third of the span: 2 * 6 * sqrt(1 - (1/3)^2) over 24.
    CHECK(ear == doctest::Approx(2 * 6 * std::sqrt(8.0 / 9.0) / 24.0).epsilon(0.12));
  }

  TEST_CASE("landmark failures") {
    const auto fail_kind = [](const GrayFrame& m) {
      try {
        eyelid_landmarks(m);
      } catch (const Error& e) {
        return e.kind();
      }
      return ErrorKind::io;
    };
    CHECK(fail_kind(GrayFrame(20, 10)) == ErrorKind::landmark);
    GrayFrame narrow(20, 10);
    narrow.at(5, 5) = narrow.at(7, 5) = 255;
    CHECK(fail_kind(narrow) == ErrorKind::landmark);
    GrayFrame wide(20, 10);
    for (int x = 0; x < 20; ++x) wide.at(x, 5) = 255;
    CHECK(fail_kind(wide) == ErrorKind::landmark);
    GrayFrame gap(20, 10);
    gap.at(2, 5) = gap.at(17, 5) = 255;
    CHECK(fail_kind(gap) == ErrorKind::landmark);
  }

  TEST_CASE("aspect ratio") {
    CHECK(eye_aspect_ratio(make_landmarks(10, 5)) == doctest::Approx(0.5));
    CHECK(eye_aspect_ratio(make_landmarks(10, 0)) == 0.0);
    const auto base = make_landmarks(12, 4);
    const double ref = eye_aspect_ratio(base);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> angle(-3.0, 3.0);
    std::uniform_real_distribution<double> scale(0.2, 8.0);
    std::uniform_real_distribution<double> shift(-100.0, 100.0);
    for (int n = 0; n < 50; ++n) {
      const auto t = transformed(base, angle(rng), scale(rng), {shift(rng), shift(rng)});
      CHECK(std::abs(eye_aspect_ratio(t) - ref) <= 1e-12);
    }
    EyelidLandmarks degenerate;
    CHECK_THROWS_AS(eye_aspect_ratio(degenerate), Error);
  }

  TEST_CASE("displacement is measured from the corner midpoint") {
    auto lm = make_landmarks(10, 3);
    IrisCenter iris;
    iris.x = 2.5;
    CHECK(displacement(iris, lm) == doctest::Approx(2.5));
    lm = transformed(lm, 0.0, 1.0, {7.0, 0.0});
    CHECK(displacement(iris, lm) == doctest::Approx(-4.5));
  }

  TEST_CASE("accumulator keeps trailing extrema") {
    FeatureAccumulator acc(3);
    auto v = acc.push(0.3, 1.0);
    CHECK(v == OcularFeatureVector{0.3, 0.3, 0.3, 1.0, 1.0, 1.0});
    acc.push(0.5, -2.0);
    v = acc.push(0.1, 0.0);
    CHECK(v == OcularFeatureVector{0.1, 0.1, 0.5, 0.0, -2.0, 1.0});
    v = acc.push(0.2, 0.5);
    CHECK(v == OcularFeatureVector{0.2, 0.1, 0.5, 0.5, -2.0, 0.5});
    v = acc.push(0.2, 0.5);
    CHECK(v.min_d == 0.0);
    CHECK(acc.size() == 3);
    acc.reset();
    CHECK(acc.size() == 0);
    CHECK_THROWS_AS(FeatureAccumulator(0), Error);

    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<std::pair<double, double>> stream(200);
    for (auto& s : stream) s = {u(rng), u(rng)};
    const auto feats = assemble_features(stream, 25);
    for (std::size_t i = 0; i < stream.size(); ++i) {
      const std::size_t lo = i >= 24 ? i - 24 : 0;
      double mn = 1e9;
      double mx = -1e9;
      for (std::size_t j = lo; j <= i; ++j) {
        mn = std::min(mn, stream[j].first);
        mx = std::max(mx, stream[j].first);
      }
      CHECK(feats[i].min_r == mn);
      CHECK(feats[i].max_r == mx);
      CHECK(feats[i].aspect_ratio == stream[i].first);
    }
  }

  TEST_CASE("observe_eye on a rendered patch") {
    EyePatch p;
    p.disc_x = 24.5;
    EyeRoi roi;
    roi.crop = gaussian_blur(render_eye_patch(p), 0.7);
    const auto obs = observe_eye(roi);
    CHECK(obs.displacement > 2.0);
    CHECK(obs.ear > 0.1);
    CHECK(obs.ear < 1.0);
  }
}
