#include "ocugaze/eye_region.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ocugaze/error.hpp"
#include "ocugaze/imgproc.hpp"

namespace ocugaze {

std::string_view to_string(EyeSide side) { return side == EyeSide::left ? "left" : "right"; }

EyeSide parse_eye_side(std::string_view text) {
  if (text == "left") return EyeSide::left;
  if (text == "right") return EyeSide::right;
  throw Error(ErrorKind::configuration, "eye side must be 'left' or 'right', got '" + std::string(text) + "'");
}

Rect eye_band(const FaceBox& face, EyeSide side, const RoiProportions& p) {
  const double begin = side == EyeSide::left ? p.left_eye_begin : p.right_eye_begin;
  const double end = side == EyeSide::left ? p.left_eye_end : p.right_eye_end;
  const auto at = [](int origin, int extent, double fraction) {
    return static_cast<int>(std::lround(origin + extent * fraction));
  };
  const int x0 = at(face.x, face.w, begin);
  const int x1 = at(face.x, face.w, end);
  const int y0 = at(face.y, face.h, p.top);
  const int y1 = at(face.y, face.h, p.bottom);
  return {x0, y0, x1 - x0, y1 - y0};
}

EyeRoi extract_eye_roi(const GrayFrame& frame, const FaceBox& face, EyeSide side, const RoiProportions& proportions) {
  const Rect band = eye_band(face, side, proportions);
  if (band.w <= 0 || band.h <= 0) {
    throw Error(ErrorKind::extraction, "eye band is empty for this face box");
  }
  EyeRoi roi;
  roi.crop = crop(frame, band);  // throws extraction if clipped away
  roi.origin = {static_cast<double>(std::max(band.x, 0)), static_cast<double>(std::max(band.y, 0))};
  roi.scale_factor = 1.0;
  roi.side = side;
  roi.mean_intensity = roi.crop.mean();
  return roi;
}

GrayFrame contrast_stretch(const GrayFrame& g) {
  const auto [lo_it, hi_it] = std::minmax_element(g.pixels().begin(), g.pixels().end());
  const int lo = *lo_it;
  const int hi = *hi_it;
  if (hi == lo) return g;
  GrayFrame out = g;
  const double gain = 255.0 / (hi - lo);
  for (auto& p : out.pixels()) p = static_cast<std::uint8_t>(std::lround((p - lo) * gain));
  return out;
}

EyeRoi normalize_roi(const EyeRoi& roi, const NormalizeParams& params) {
  EyeRoi out = roi;
  if (roi.crop.mean() < params.stretch_below_mean) {
    out.crop = contrast_stretch(roi.crop);
    out.contrast_stretched = !(out.crop == roi.crop);
  }
  const int before = out.crop.height();
  auto scaled = downscale(out.crop, params.target_height);
  out.downscale_skipped = scaled.warning;
  out.crop = std::move(scaled.frame);
  out.scale_factor = roi.scale_factor * static_cast<double>(out.crop.height()) / before;
  out.mean_intensity = out.crop.mean();
  return out;
}

}  // namespace ocugaze
