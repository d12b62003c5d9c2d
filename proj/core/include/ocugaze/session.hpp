#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ocugaze/dataset.hpp"
#include "ocugaze/metrics.hpp"
#include "ocugaze/nn.hpp"
#include "ocugaze/pipeline.hpp"
#include "ocugaze/wire.hpp"

namespace ocugaze {

enum class SessionMode { idle, calibrating, evaluating, live };
std::string_view to_string(SessionMode mode);

struct SessionConfig {
  double dwell_s = 3.0;
  /// Frames this soon after a target switch are ignored (saccade transit).
  double discard_s = 0.5;
  std::string session_prefix = "session";
};

struct SessionState {
  SessionMode mode = SessionMode::idle;
  std::optional<GazeClass> target;  // set iff calibrating or evaluating
  std::size_t captured_this_target = 0;
  double capture_rate = 0.0;  // captures in the trailing second
  std::uint64_t session = 0;  // 0 before the first session
};

/// What the session sees of one processed frame.
struct FrameEvent {
  double t_s = 0.0;
  std::optional<DropReason> drop;
  OcularFeatureVector features;
  std::optional<Prediction> prediction;  // absent when no model is loaded
  GazeClass smoothed = GazeClass::center;

  static FrameEvent from(double t_s, const FrameOutcome& outcome);
};

/// Calibration / evaluation / live state machine. Single-threaded: only the
/// session worker calls into it.
class SessionController {
 public:
  explicit SessionController(SessionConfig config = {});

  /// Starts or stops a session at time `now_s`. A start while another
  /// session runs stops that one first.
  std::vector<wire::Outbound> handle(const wire::Inbound& message, double now_s);

  /// Advances the target schedule to `event.t_s`, then labels or predicts.
  std::vector<wire::Outbound> tick(const FrameEvent& event);

  const SessionState& state() const noexcept { return state_; }
  const SessionConfig& config() const noexcept { return config_; }

  /// Labeled instances captured by calibration and evaluation sessions.
  const std::vector<LabeledInstance>& recorded() const noexcept { return recorded_; }
  std::vector<LabeledInstance> take_recorded();
  /// Evaluation of the current (or last) evaluation session.
  const ReportAccumulator& evaluation() const noexcept { return evaluation_; }
  /// Captured instances per target in the current or last labeled session.
  const std::array<std::size_t, kClassCount>& captured_per_class() const noexcept { return per_class_; }

 private:
  void start(SessionMode mode, double dwell_s, double now_s, std::vector<wire::Outbound>& out);
  void finish(std::vector<wire::Outbound>& out);
  void advance(double now_s, std::vector<wire::Outbound>& out);
  std::string session_name() const;

  SessionConfig config_;
  SessionState state_;
  double dwell_s_ = 3.0;
  double target_start_s_ = 0.0;
  std::deque<double> recent_;
  std::vector<LabeledInstance> recorded_;
  ReportAccumulator evaluation_;
  std::array<std::size_t, kClassCount> per_class_{};
  std::uint64_t session_counter_ = 0;
};

}  // namespace ocugaze
