#include "ocugaze/session.hpp"

#include <cmath>

#include "ocugaze/error.hpp"

namespace ocugaze {

std::string_view to_string(SessionMode mode) {
  switch (mode) {
    case SessionMode::idle: return "idle";
    case SessionMode::calibrating: return "calibrating";
    case SessionMode::evaluating: return "evaluating";
    case SessionMode::live: return "live";
  }
  return "idle";
}

FrameEvent FrameEvent::from(double t_s, const FrameOutcome& outcome) {
  FrameEvent e;
  e.t_s = t_s;
  e.drop = outcome.drop;
  if (outcome.ok()) {
    e.features = outcome.features;
    e.prediction = outcome.prediction;
    e.smoothed = outcome.smoothed;
  }
  return e;
}

SessionController::SessionController(SessionConfig config) : config_(std::move(config)) {
  if (!(config_.dwell_s > 0.0)) throw Error(ErrorKind::configuration, "dwell must be positive");
  if (config_.discard_s < 0.0 || config_.discard_s >= config_.dwell_s) {
    throw Error(ErrorKind::configuration, "discard interval must lie in [0, dwell)");
  }
  dwell_s_ = config_.dwell_s;
}

std::vector<LabeledInstance> SessionController::take_recorded() {
  std::vector<LabeledInstance> out;
  out.swap(recorded_);
  return out;
}

std::string SessionController::session_name() const {
  return config_.session_prefix + "-" + std::to_string(state_.session);
}

std::vector<wire::Outbound> SessionController::handle(const wire::Inbound& message, double now_s) {
  std::vector<wire::Outbound> out;
  if (std::holds_alternative<wire::StartCalibration>(message)) {
    start(SessionMode::calibrating, std::get<wire::StartCalibration>(message).dwell_s, now_s, out);
  } else if (std::holds_alternative<wire::StartEvaluation>(message)) {
    start(SessionMode::evaluating, std::get<wire::StartEvaluation>(message).dwell_s, now_s, out);
  } else if (std::holds_alternative<wire::StartLive>(message)) {
    start(SessionMode::live, dwell_s_, now_s, out);
  } else {
    finish(out);
  }
  return out;
}

void SessionController::start(SessionMode mode, double dwell_s, double now_s, std::vector<wire::Outbound>& out) {
  if (!(dwell_s > config_.discard_s)) throw Error(ErrorKind::parameter, "dwell must exceed the discard interval");
  if (state_.mode != SessionMode::idle) finish(out);
  state_ = SessionState{};
  state_.mode = mode;
  state_.session = ++session_counter_;
  dwell_s_ = dwell_s;
  target_start_s_ = now_s;
  recent_.clear();
  if (mode == SessionMode::live) return;
  per_class_ = {};
  if (mode == SessionMode::evaluating) evaluation_ = ReportAccumulator{};
  state_.target = GazeClass::north_west;
  out.push_back(wire::Target{*state_.target, state_.session});
}

void SessionController::finish(std::vector<wire::Outbound>& out) {
  if (state_.mode == SessionMode::evaluating && evaluation_.size() > 0) {
    out.push_back(wire::Report{evaluation_.report(), state_.session});
  }
  state_.mode = SessionMode::idle;
  state_.target.reset();
  state_.captured_this_target = 0;
  state_.capture_rate = 0.0;
  recent_.clear();
}

void SessionController::advance(double now_s, std::vector<wire::Outbound>& out) {
  while (state_.target && now_s - target_start_s_ >= dwell_s_) {
    const int next = label(*state_.target) + 1;
    if (next > kClassCount) {
      finish(out);
      return;
    }
    target_start_s_ += dwell_s_;
    state_.target = gaze_class(next);
    state_.captured_this_target = 0;
    recent_.clear();
    out.push_back(wire::Target{*state_.target, state_.session});
  }
}

std::vector<wire::Outbound> SessionController::tick(const FrameEvent& e) {
  std::vector<wire::Outbound> out;
  if (state_.mode == SessionMode::idle) return out;
  advance(e.t_s, out);
  if (state_.mode == SessionMode::idle) return out;

  if (e.drop) {
    out.push_back(wire::Drop{*e.drop, state_.session});
    return out;
  }
  if (state_.mode == SessionMode::live) {
    if (e.prediction) out.push_back(wire::PredictionMsg{e.prediction->label, e.prediction->confidences, e.smoothed, state_.session});
    return out;
  }

  if (e.t_s - target_start_s_ < config_.discard_s) return out;
  const GazeClass target = *state_.target;
  LabeledInstance inst;
  inst.features = e.features;
  inst.label = target;
  inst.session_id = session_name();
  inst.timestamp_ms = std::llround(e.t_s * 1000.0);
  recorded_.push_back(std::move(inst));
  ++state_.captured_this_target;
  ++per_class_[static_cast<std::size_t>(label(target) - 1)];

  recent_.push_back(e.t_s);
  while (!recent_.empty() && recent_.front() <= e.t_s - 1.0) recent_.pop_front();
  state_.capture_rate = static_cast<double>(recent_.size());

  if (state_.mode == SessionMode::evaluating && e.prediction) {
    evaluation_.add(label(target), label(e.prediction->label));
    out.push_back(wire::PredictionMsg{e.prediction->label, e.prediction->confidences, e.smoothed, state_.session});
  }
  return out;
}

}  // namespace ocugaze
