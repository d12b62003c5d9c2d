#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "ocugaze/image.hpp"
#include "ocugaze/imgproc.hpp"

namespace ocugaze {

// Boosted haar cascade as stored in the OpenCV "opencv-cascade-classifier"
// XML layout (stageType BOOST, featureType HAAR). Only depth-1 trees
// (stumps) and upright features are accepted.

struct HaarRect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  double weight = 0.0;
};

struct HaarFeature {
  std::vector<HaarRect> rects;  // 2 or 3
};

struct Stump {
  int feature = 0;
  double threshold = 0.0;
  double left = 0.0;   // taken when the normalized feature value < threshold
  double right = 0.0;
};

struct CascadeStage {
  std::vector<Stump> stumps;
  double threshold = 0.0;
};

struct Cascade {
  int window_width = 24;
  int window_height = 24;
  std::vector<CascadeStage> stages;
  std::vector<HaarFeature> features;

  std::size_t stump_count() const;
};

/// Throws Error(parse) with the offending node path on malformed input and
/// Error(unsupported_format) for non-stump trees, tilted features or the
/// legacy cascade layout.
Cascade load_cascade(std::string_view xml);
Cascade load_cascade_file(const std::filesystem::path& path);

struct FaceBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  int score = 0;  // raw detections merged into this box

  Rect rect() const { return {x, y, w, h}; }
};

/// Sum and squared-sum tables of one frame.
struct IntegralPair {
  IntegralImage sum;
  IntegralImage squared;

  static IntegralPair of(const GrayFrame& frame) { return {integral(frame), squared_integral(frame)}; }
};

/// Cascade geometry resolved at one detection scale: rectangles rounded to
/// pixel coordinates, weights divided by the normalization area, and the
/// first rectangle's weight rebalanced so the weighted areas cancel.
class ScaledCascade {
 public:
  struct Feature {
    std::array<HaarRect, 3> rects{};
    int count = 0;
  };

  ScaledCascade(const Cascade& cascade, double scale);

  const Cascade& base() const noexcept { return *base_; }
  double scale() const noexcept { return scale_; }
  int window_size() const noexcept { return window_; }
  /// Variance-normalization rectangle, relative to the window origin.
  const Rect& norm_rect() const noexcept { return norm_rect_; }
  double inv_norm_area() const noexcept { return inv_area_; }
  const std::vector<Feature>& features() const noexcept { return features_; }

 private:
  const Cascade* base_;
  double scale_;
  int window_;
  Rect norm_rect_;
  double inv_area_;
  std::vector<Feature> features_;
};

struct WindowEvaluation {
  bool passed = false;
  int stages_evaluated = 0;
  double stddev = 0.0;
  std::vector<double> stage_sums;
};

/// Windows whose standard deviation falls below this fail immediately.
inline constexpr double kMinWindowStddev = 1.0;

bool evaluate_window(const ScaledCascade& cascade, const IntegralPair& tables, int x, int y);

/// Like evaluate_window, but records each stage sum. With early_exit off
/// every stage is evaluated and `passed` is the conjunction.
WindowEvaluation trace_window(const ScaledCascade& cascade, const IntegralPair& tables, int x, int y,
                              bool early_exit = true);

struct DetectorParams {
  double scale_factor = 1.2;
  double merge_iou = 0.4;
  int min_group = 3;
};

/// Raw (unmerged) window hits over the scale pyramid.
std::vector<Rect> scan_windows(const GrayFrame& frame, const Cascade& cascade, int min_size,
                               const DetectorParams& params = {});

/// Groups boxes whose IoU >= merge_iou (transitively) and averages each group.
std::vector<FaceBox> group_detections(const std::vector<Rect>& raw, double merge_iou);

/// Dominant face, or nullopt when no group reaches min_group members.
/// Throws Error(dimension) when the frame is smaller than min_size.
std::optional<FaceBox> detect_face(const GrayFrame& frame, const Cascade& cascade, int min_size,
                                   const DetectorParams& params = {});

}  // namespace ocugaze
