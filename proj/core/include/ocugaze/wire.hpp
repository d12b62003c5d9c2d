#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include "ocugaze/metrics.hpp"
#include "ocugaze/ocular_features.hpp"
#include "ocugaze/pipeline.hpp"

namespace ocugaze::wire {

// Inbound (UI -> service).
struct StartCalibration {
  double dwell_s = 3.0;
  friend bool operator==(const StartCalibration&, const StartCalibration&) = default;
};
struct StartEvaluation {
  double dwell_s = 3.0;
  friend bool operator==(const StartEvaluation&, const StartEvaluation&) = default;
};
struct StartLive {
  friend bool operator==(const StartLive&, const StartLive&) = default;
};
struct Stop {
  friend bool operator==(const Stop&, const Stop&) = default;
};

using Inbound = std::variant<StartCalibration, StartEvaluation, StartLive, Stop>;

// Outbound (service -> UI). `session` is 0 outside a session.
struct Target {
  GazeClass cls = GazeClass::center;
  std::uint64_t session = 0;
  friend bool operator==(const Target&, const Target&) = default;
};
struct PredictionMsg {
  GazeClass cls = GazeClass::center;
  std::array<double, kClassCount> confidences{};
  GazeClass smoothed = GazeClass::center;
  std::uint64_t session = 0;
  friend bool operator==(const PredictionMsg&, const PredictionMsg&) = default;
};
struct Drop {
  DropReason reason = DropReason::no_face;
  std::uint64_t session = 0;
  friend bool operator==(const Drop&, const Drop&) = default;
};
struct Report {
  ClassificationReport report;
  std::uint64_t session = 0;
  friend bool operator==(const Report&, const Report&) = default;
};
struct Stats {
  PipelineStats stats;
  std::uint64_t session = 0;
  friend bool operator==(const Stats& a, const Stats& b) {
    return a.session == b.session && a.stats.to_json() == b.stats.to_json();
  }
};

using Outbound = std::variant<Target, PredictionMsg, Drop, Report, Stats>;

/// One JSON object per message, no trailing newline.
std::string serialize(const Inbound& message);
std::string serialize(const Outbound& message);

/// Throws Error(parse) on malformed JSON, unknown "type" tags, missing
/// fields or out-of-range values.
Inbound parse_inbound(std::string_view text);
Outbound parse_outbound(std::string_view text);

std::string_view type_of(const Outbound& message);

PipelineStats parse_stats(std::string_view json);

}  // namespace ocugaze::wire
