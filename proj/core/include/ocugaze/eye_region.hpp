#pragma once

#include <string_view>

#include "ocugaze/face_detect.hpp"
#include "ocugaze/image.hpp"

namespace ocugaze {

/// Anatomical side of the user. The user's left eye appears on the right
/// half of an unmirrored camera image.
enum class EyeSide { left, right };

std::string_view to_string(EyeSide side);
EyeSide parse_eye_side(std::string_view text);

/// Eye band as fractions of the face box.
struct RoiProportions {
  double top = 0.25;
  double bottom = 0.45;
  double right_eye_begin = 0.13;  // user's right eye, image-left
  double right_eye_end = 0.45;
  double left_eye_begin = 0.55;   // user's left eye, image-right
  double left_eye_end = 0.87;
};

struct EyeRoi {
  GrayFrame crop;
  Point origin;               // frame coordinates of crop pixel (0, 0)
  double scale_factor = 1.0;  // ROI pixels per frame pixel
  EyeSide side = EyeSide::left;
  double mean_intensity = 0.0;  // illumination proxy, mean of `crop`
  bool contrast_stretched = false;
  bool downscale_skipped = false;  // crop was already shorter than the target height
};

/// ROI rectangle in frame coordinates before clipping.
Rect eye_band(const FaceBox& face, EyeSide side, const RoiProportions& proportions = {});

/// Throws Error(extraction) when the band is empty after clipping.
EyeRoi extract_eye_roi(const GrayFrame& frame, const FaceBox& face, EyeSide side,
                       const RoiProportions& proportions = {});

struct NormalizeParams {
  int target_height = 24;
  double stretch_below_mean = 80.0;
};

/// Min/max contrast stretch when the ROI is dark, then area downscale.
EyeRoi normalize_roi(const EyeRoi& roi, const NormalizeParams& params = {});

/// Linear map [min, max] -> [0, 255]; identity when min == max.
GrayFrame contrast_stretch(const GrayFrame& g);

}  // namespace ocugaze
