#include "ocugaze/pipeline.hpp"

#include <algorithm>
#include <chrono>

#include <json.hpp>

#include "ocugaze/error.hpp"

namespace ocugaze {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Extraction {
  std::optional<DropReason> drop;
  std::optional<FaceBox> face;
  double ear = 0.0;
  double displacement = 0.0;
};

// Runs detection through EAR/displacement, timing each stage into `ms`.
Extraction run_stages(const GrayFrame& frame, const Cascade& cascade, const PipelineConfig& config,
                      std::array<double, kStageCount>& ms) {
  Extraction x;
  auto t = Clock::now();
  x.face = detect_face(frame, cascade, config.min_face_size, config.detector);
  ms[static_cast<std::size_t>(Stage::detect)] = ms_since(t);
  if (!x.face) {
    x.drop = DropReason::no_face;
    return x;
  }

  t = Clock::now();
  EyeRoi roi;
  try {
    roi = normalize_roi(extract_eye_roi(frame, *x.face, config.eye, config.roi), config.normalize);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::extraction) throw;
    ms[static_cast<std::size_t>(Stage::roi)] = ms_since(t);
    x.drop = DropReason::no_face;
    return x;
  }
  ms[static_cast<std::size_t>(Stage::roi)] = ms_since(t);

  t = Clock::now();
  const auto mask = eye_mask(roi.crop);
  IrisCenter iris;
  try {
    iris = locate_iris(roi.crop, mask);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::localization) throw;
    ms[static_cast<std::size_t>(Stage::eye)] = ms_since(t);
    x.drop = DropReason::iris_fail;
    return x;
  }
  try {
    const auto lm = eyelid_landmarks(mask);
    x.ear = eye_aspect_ratio(lm);
    x.displacement = displacement(iris, lm);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::landmark && e.kind() != ErrorKind::parameter) throw;
    x.drop = DropReason::landmark_fail;
  }
  ms[static_cast<std::size_t>(Stage::eye)] = ms_since(t);
  return x;
}

}  // namespace

std::string_view to_string(DropReason reason) {
  switch (reason) {
    case DropReason::no_face: return "no-face";
    case DropReason::iris_fail: return "iris-fail";
    case DropReason::landmark_fail: return "landmark-fail";
  }
  return "no-face";
}

DropReason parse_drop_reason(std::string_view text) {
  for (auto r : {DropReason::no_face, DropReason::iris_fail, DropReason::landmark_fail}) {
    if (to_string(r) == text) return r;
  }
  throw Error(ErrorKind::parse, "unknown drop reason '" + std::string(text) + "'");
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::detect: return "detect";
    case Stage::roi: return "roi";
    case Stage::eye: return "eye";
    case Stage::features: return "features";
    case Stage::predict: return "predict";
  }
  return "detect";
}

PredictionWindow::PredictionWindow(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw Error(ErrorKind::parameter, "smoothing window must hold at least one prediction");
}

void PredictionWindow::push(GazeClass label, double confidence) {
  if (entries_.size() == static_cast<std::size_t>(capacity_)) entries_.pop_front();
  entries_.push_back({label, confidence});
}

GazeClass smooth(const PredictionWindow& window) {
  if (window.empty()) throw Error(ErrorKind::parameter, "cannot smooth an empty prediction window");
  std::array<int, kClassCount> votes{};
  std::array<double, kClassCount> conf{};
  for (const auto& e : window.entries()) {
    const auto k = static_cast<std::size_t>(label(e.label) - 1);
    ++votes[k];
    conf[k] += e.confidence;
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < kClassCount; ++k) {
    if (votes[k] > votes[best]) {
      best = k;
    } else if (votes[k] == votes[best] && votes[k] > 0 && conf[k] / votes[k] > conf[best] / votes[best]) {
      best = k;
    }
  }
  return gaze_class(static_cast<int>(best) + 1);
}

std::uint64_t PipelineStats::frames_dropped() const {
  std::uint64_t n = 0;
  for (auto d : dropped) n += d;
  return n;
}

double PipelineStats::mean_frame_ms() const {
  return frames_seen == 0 ? 0.0 : total_ms / static_cast<double>(frames_seen);
}

std::string PipelineStats::to_json() const {
  nlohmann::json dropped_by;
  for (auto r : {DropReason::no_face, DropReason::iris_fail, DropReason::landmark_fail}) {
    dropped_by[std::string(to_string(r))] = dropped[static_cast<std::size_t>(r)];
  }
  nlohmann::json stages;
  for (std::size_t s = 0; s < kStageCount; ++s) {
    stages[std::string(to_string(static_cast<Stage>(s)))] = stage_ms[s];
  }
  nlohmann::json doc{{"frames_seen", frames_seen},
                     {"frames_dropped", frames_dropped()},
                     {"dropped", dropped_by},
                     {"stage_ms", stages},
                     {"total_ms", total_ms},
                     {"mean_frame_ms", mean_frame_ms()}};
  return doc.dump();
}

Pipeline::Pipeline(Cascade cascade, Model model, PipelineConfig config)
    : cascade_(std::move(cascade)),
      model_(std::move(model)),
      config_(std::move(config)),
      accumulator_(config_.feature_window),
      window_(config_.smoothing_window) {
  model_.params.validate();
  if (model_.params.input_size() != static_cast<int>(kFeatureCount)) {
    throw Error(ErrorKind::configuration, "model must take 6 features");
  }
}

void Pipeline::reset() {
  accumulator_.reset();
  window_.clear();
}

FrameOutcome Pipeline::process_frame(const GrayFrame& frame) {
  const auto t0 = Clock::now();
  FrameOutcome out;
  const auto x = run_stages(frame, cascade_, config_, out.stage_ms);
  out.face = x.face;
  ++stats_.frames_seen;
  if (x.drop) {
    out.drop = x.drop;
    ++stats_.dropped[static_cast<std::size_t>(*x.drop)];
  } else {
    auto t = Clock::now();
    out.features = accumulator_.push(x.ear, x.displacement);
    out.stage_ms[static_cast<std::size_t>(Stage::features)] = ms_since(t);

    t = Clock::now();
    out.prediction = predict(model_, out.features);
    const auto k = static_cast<std::size_t>(label(out.prediction.label) - 1);
    window_.push(out.prediction.label, out.prediction.confidences[k]);
    out.smoothed = smooth(window_);
    out.stage_ms[static_cast<std::size_t>(Stage::predict)] = ms_since(t);
  }
  out.total_ms = ms_since(t0);
  for (std::size_t s = 0; s < kStageCount; ++s) stats_.stage_ms[s] += out.stage_ms[s];
  stats_.total_ms += out.total_ms;
  return out;
}

FeatureOutcome extract_features(const GrayFrame& frame, const Cascade& cascade, const PipelineConfig& config,
                                FeatureAccumulator& accumulator) {
  std::array<double, kStageCount> ms{};
  const auto x = run_stages(frame, cascade, config, ms);
  FeatureOutcome out;
  out.face = x.face;
  out.drop = x.drop;
  if (!x.drop) out.features = accumulator.push(x.ear, x.displacement);
  return out;
}

}  // namespace ocugaze
