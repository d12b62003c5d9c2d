#pragma once

#include <cstdint>

#include "ocugaze/image.hpp"
#include "ocugaze/ocular_features.hpp"

namespace ocugaze {

/// Parameters of a flat-shaded frontal face drawn with filled ellipses.
/// Lengths other than the frame size are fractions of `size`.
struct FaceScene {
  int width = 640;
  int height = 480;
  double cx = 320.0;
  double cy = 240.0;
  double size = 180.0;

  std::uint8_t background = 70;
  std::uint8_t skin = 200;
  std::uint8_t sclera = 120;
  std::uint8_t iris = 25;
  std::uint8_t brow = 160;

  double eye_dx = 0.17;
  double eye_dy = 0.17;
  double brow_dy = 0.12;

  /// Horizontal iris offset in units of the eye half-width, positive to
  /// image-right.
  double gaze_x = 0.0;
  /// Vertical eye opening relative to a neutral lid.
  double lid_open = 1.0;

  double blur_sigma = 1.5;
  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 0;
};

struct RenderedFace {
  GrayFrame frame;
  Rect face;           // bounding box of the face ellipse
  Point left_iris;     // user's left eye (image-right), frame coordinates
  Point right_iris;
};

RenderedFace render_face(const FaceScene& scene);

/// Scene looking toward the given screen cell: the iris shifts toward
/// image-right for western targets, the lids open wider for northern ones.
FaceScene scene_for_gaze(GazeClass c, FaceScene base = {});

/// Eye patch: an almond of `sclera` on `skin` with a dark disc.
struct EyePatch {
  int width = 40;
  int height = 24;
  double disc_x = 20.0;
  double disc_y = 12.0;
  double disc_radius = 4.0;
  std::uint8_t skin = 200;
  std::uint8_t sclera = 150;
  std::uint8_t iris = 30;
  /// Multiplies every intensity; models a global illumination change.
  double brightness = 1.0;
};

GrayFrame render_eye_patch(const EyePatch& patch);

/// Separable Gaussian, replicated borders, radius ceil(3 sigma).
GrayFrame gaussian_blur(const GrayFrame& g, double sigma);

}  // namespace ocugaze
