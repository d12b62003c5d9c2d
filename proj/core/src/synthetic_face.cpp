#include "ocugaze/synthetic_face.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "ocugaze/error.hpp"

namespace ocugaze {
namespace {

std::uint8_t clamp_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

bool inside_ellipse(double x, double y, double cx, double cy, double ax, double ay) {
  const double u = (x - cx) / ax;
  const double v = (y - cy) / ay;
  return u * u + v * v <= 1.0;
}

// Pixel centres are at integer coordinates.
template <class Pred>
void fill(GrayFrame& g, double cx, double cy, double ax, double ay, std::uint8_t value, Pred&& also) {
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - ax)));
  const int x1 = std::min(g.width() - 1, static_cast<int>(std::ceil(cx + ax)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - ay)));
  const int y1 = std::min(g.height() - 1, static_cast<int>(std::ceil(cy + ay)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (inside_ellipse(x, y, cx, cy, ax, ay) && also(x, y)) g.at(x, y) = value;
    }
  }
}

void fill(GrayFrame& g, double cx, double cy, double ax, double ay, std::uint8_t value) {
  fill(g, cx, cy, ax, ay, value, [](int, int) { return true; });
}

}  // namespace

GrayFrame gaussian_blur(const GrayFrame& g, double sigma) {
  if (!(sigma > 0.0)) return g;
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(static_cast<std::size_t>(2 * r + 1));
  double total = 0.0;
  for (int i = -r; i <= r; ++i) {
    taps[static_cast<std::size_t>(i + r)] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += taps[static_cast<std::size_t>(i + r)];
  }
  for (auto& t : taps) t /= total;

  const int w = g.width();
  const int h = g.height();
  std::vector<double> tmp(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    const auto row = g.row(y);
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) {
        acc += taps[static_cast<std::size_t>(i + r)] * row[static_cast<std::size_t>(std::clamp(x + i, 0, w - 1))];
      }
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  GrayFrame out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) {
        acc += taps[static_cast<std::size_t>(i + r)] * tmp[static_cast<std::size_t>(std::clamp(y + i, 0, h - 1)) * w + x];
      }
      out.at(x, y) = clamp_byte(acc);
    }
  }
  return out;
}

RenderedFace render_face(const FaceScene& s) {
  if (!(s.size > 0.0)) throw Error(ErrorKind::parameter, "face size must be positive");
  RenderedFace out;
  GrayFrame g(s.width, s.height, s.background);
  const double z = s.size;

  const double fax = 0.42 * z;
  const double fay = 0.55 * z;
  fill(g, s.cx, s.cy, fax, fay, s.skin);
  out.face = Rect{static_cast<int>(std::lround(s.cx - fax)), static_cast<int>(std::lround(s.cy - fay)),
                  static_cast<int>(std::lround(2 * fax)), static_cast<int>(std::lround(2 * fay))};

  const double ey = s.cy - std::floor(z * s.eye_dy);
  for (int sx : {-1, 1}) {
    const double ex = s.cx + sx * std::floor(z * s.eye_dx);
    fill(g, ex, ey - std::floor(z * s.brow_dy), 0.11 * z, 0.03 * z, s.brow);

    const double ew = std::floor(0.09 * z);
    const double eh = std::max(1.0, std::floor(0.045 * z * s.lid_open));
    fill(g, ex, ey, ew, eh, s.sclera);
    const double ix = ex + s.gaze_x * ew * 0.55;
    const double ir = std::floor(0.035 * z);
    // Iris clipped to the eye opening.
    fill(g, ix, ey, ir, ir, s.iris, [&](int x, int y) { return inside_ellipse(x, y, ex, ey, ew, eh); });
    (sx > 0 ? out.left_iris : out.right_iris) = Point{ix, ey};
  }

  fill(g, s.cx, s.cy + std::floor(0.10 * z), 0.03 * z, 0.08 * z, clamp_byte(s.skin - 40.0));
  fill(g, s.cx, s.cy + std::floor(0.28 * z), 0.12 * z, 0.03 * z, clamp_byte(s.skin - 100.0));

  g = gaussian_blur(g, s.blur_sigma);
  if (s.noise_sigma > 0.0) {
    std::mt19937_64 rng(s.noise_seed);
    std::normal_distribution<double> noise(0.0, s.noise_sigma);
    for (auto& p : g.pixels()) p = clamp_byte(p + noise(rng));
  }
  out.frame = std::move(g);
  return out;
}

FaceScene scene_for_gaze(GazeClass c, FaceScene base) {
  const auto [row, col] = grid_cell(c);
  static constexpr double kGazeX[3] = {1.0, 0.0, -1.0};
  static constexpr double kOpen[3] = {1.25, 1.0, 0.8};
  base.gaze_x = kGazeX[col];
  base.lid_open = kOpen[row];
  return base;
}

GrayFrame render_eye_patch(const EyePatch& p) {
  GrayFrame g(p.width, p.height, p.skin);
  const double cx = (p.width - 1) / 2.0;
  const double cy = (p.height - 1) / 2.0;
  const double ax = 0.42 * p.width;
  const double ay = 0.36 * p.height;
  fill(g, cx, cy, ax, ay, p.sclera);
  fill(g, p.disc_x, p.disc_y, p.disc_radius, p.disc_radius, p.iris);
  if (p.brightness != 1.0) {
    for (auto& v : g.pixels()) v = clamp_byte(v * p.brightness);
  }
  return g;
}

}  // namespace ocugaze
