#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>

#include "ocugaze/eye_region.hpp"
#include "ocugaze/face_detect.hpp"
#include "ocugaze/nn.hpp"
#include "ocugaze/ocular_features.hpp"

namespace ocugaze {

enum class DropReason { no_face, iris_fail, landmark_fail };

inline constexpr std::size_t kDropReasonCount = 3;

/// "no-face", "iris-fail", "landmark-fail".
std::string_view to_string(DropReason reason);
DropReason parse_drop_reason(std::string_view text);

/// Last M per-frame predictions with the confidence of the predicted class.
class PredictionWindow {
 public:
  struct Entry {
    GazeClass label = GazeClass::center;
    double confidence = 0.0;
  };

  /// Throws Error(parameter) when capacity < 1.
  explicit PredictionWindow(int capacity = 15);

  void push(GazeClass label, double confidence);
  void clear() { entries_.clear(); }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  int capacity() const noexcept { return capacity_; }
  const std::deque<Entry>& entries() const noexcept { return entries_; }

 private:
  int capacity_;
  std::deque<Entry> entries_;
};

/// Majority label; ties go to the higher mean confidence, then the lower
/// label. Throws Error(parameter) on an empty window.
GazeClass smooth(const PredictionWindow& window);

enum class Stage { detect, roi, eye, features, predict };
inline constexpr std::size_t kStageCount = 5;
std::string_view to_string(Stage stage);

struct PipelineStats {
  std::uint64_t frames_seen = 0;
  std::array<std::uint64_t, kDropReasonCount> dropped{};
  std::array<double, kStageCount> stage_ms{};  // summed over all frames
  double total_ms = 0.0;

  std::uint64_t frames_dropped() const;
  double mean_frame_ms() const;
  std::string to_json() const;
};

struct PipelineConfig {
  int min_face_size = 96;
  DetectorParams detector;
  EyeSide eye = EyeSide::left;
  RoiProportions roi;
  NormalizeParams normalize;
  int feature_window = 25;
  int smoothing_window = 15;
};

struct FrameOutcome {
  std::optional<DropReason> drop;
  std::optional<FaceBox> face;
  OcularFeatureVector features;  // meaningful only without a drop
  Prediction prediction;
  GazeClass smoothed = GazeClass::center;
  std::array<double, kStageCount> stage_ms{};
  double total_ms = 0.0;

  bool ok() const noexcept { return !drop.has_value(); }
};

/// One stream's frame-to-prediction chain. Not thread-safe; give each
/// stream its own instance.
class Pipeline {
 public:
  Pipeline(Cascade cascade, Model model, PipelineConfig config = {});

  /// Stage failures come back as FrameOutcome::drop; only invalid input
  /// (frame smaller than the minimum face size) throws.
  FrameOutcome process_frame(const GrayFrame& frame);

  /// Clears the feature accumulator and the prediction window.
  void reset();

  const PipelineStats& stats() const noexcept { return stats_; }
  const PipelineConfig& config() const noexcept { return config_; }
  const Model& model() const noexcept { return model_; }

 private:
  Cascade cascade_;
  Model model_;
  PipelineConfig config_;
  FeatureAccumulator accumulator_;
  PredictionWindow window_;
  PipelineStats stats_;
};

/// Feature extraction for one frame without prediction; used when
/// recording calibration data. Drops leave `accumulator` untouched.
struct FeatureOutcome {
  std::optional<DropReason> drop;
  std::optional<FaceBox> face;
  OcularFeatureVector features;
};

FeatureOutcome extract_features(const GrayFrame& frame, const Cascade& cascade, const PipelineConfig& config,
                                FeatureAccumulator& accumulator);

}  // namespace ocugaze
