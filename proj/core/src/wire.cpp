#include "ocugaze/wire.hpp"

#include <json.hpp>

#include "ocugaze/error.hpp"

namespace ocugaze::wire {
namespace {

using nlohmann::json;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

json parse_object(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parse, std::string("message: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("type") || !doc["type"].is_string()) {
    throw Error(ErrorKind::parse, "message: expected an object with a string \"type\"");
  }
  return doc;
}

GazeClass class_field(const json& doc, const char* key) {
  const auto& v = doc.at(key);
  if (!v.is_number_integer()) throw Error(ErrorKind::parse, std::string("message: \"") + key + "\" must be an integer");
  const int c = v.get<int>();
  if (c < 1 || c > kClassCount) throw Error(ErrorKind::parse, std::string("message: \"") + key + "\" outside 1..9");
  return gaze_class(c);
}

double dwell_field(const json& doc) {
  if (!doc.contains("dwell_s")) return 3.0;
  const auto& v = doc["dwell_s"];
  if (!v.is_number() || !(v.get<double>() > 0.0)) throw Error(ErrorKind::parse, "message: dwell_s must be a positive number");
  return v.get<double>();
}

std::uint64_t session_field(const json& doc) {
  return doc.contains("session") ? doc["session"].get<std::uint64_t>() : 0;
}

}  // namespace

std::string serialize(const Inbound& message) {
  const json doc = std::visit(overloaded{
                                  [](const StartCalibration& m) { return json{{"type", "start_calibration"}, {"dwell_s", m.dwell_s}}; },
                                  [](const StartEvaluation& m) { return json{{"type", "start_evaluation"}, {"dwell_s", m.dwell_s}}; },
                                  [](const StartLive&) { return json{{"type", "start_live"}}; },
                                  [](const Stop&) { return json{{"type", "stop"}}; },
                              },
                              message);
  return doc.dump();
}

Inbound parse_inbound(std::string_view text) {
  const auto doc = parse_object(text);
  const auto type = doc["type"].get<std::string>();
  if (type == "start_calibration") return StartCalibration{dwell_field(doc)};
  if (type == "start_evaluation") return StartEvaluation{dwell_field(doc)};
  if (type == "start_live") return StartLive{};
  if (type == "stop") return Stop{};
  throw Error(ErrorKind::parse, "message: unknown inbound type '" + type + "'");
}

std::string_view type_of(const Outbound& message) {
  return std::visit(overloaded{
                        [](const Target&) { return std::string_view("target"); },
                        [](const PredictionMsg&) { return std::string_view("prediction"); },
                        [](const Drop&) { return std::string_view("drop"); },
                        [](const Report&) { return std::string_view("report"); },
                        [](const Stats&) { return std::string_view("stats"); },
                    },
                    message);
}

std::string serialize(const Outbound& message) {
  json doc = std::visit(overloaded{
                            [](const Target& m) { return json{{"class", label(m.cls)}, {"session", m.session}}; },
                            [](const PredictionMsg& m) {
                              return json{{"class", label(m.cls)},
                                          {"confidences", m.confidences},
                                          {"smoothed", label(m.smoothed)},
                                          {"session", m.session}};
                            },
                            [](const Drop& m) { return json{{"reason", to_string(m.reason)}, {"session", m.session}}; },
                            [](const Report& m) {
                              auto d = json::parse(m.report.to_json());
                              d["session"] = m.session;
                              return d;
                            },
                            [](const Stats& m) {
                              auto d = json::parse(m.stats.to_json());
                              d["session"] = m.session;
                              return d;
                            },
                        },
                        message);
  doc["type"] = type_of(message);
  return doc.dump();
}

PipelineStats parse_stats(std::string_view text) {
  PipelineStats s;
  try {
    const auto doc = json::parse(text);
    s.frames_seen = doc.at("frames_seen").get<std::uint64_t>();
    for (auto r : {DropReason::no_face, DropReason::iris_fail, DropReason::landmark_fail}) {
      s.dropped[static_cast<std::size_t>(r)] = doc.at("dropped").at(std::string(to_string(r))).get<std::uint64_t>();
    }
    for (std::size_t k = 0; k < kStageCount; ++k) {
      s.stage_ms[k] = doc.at("stage_ms").at(std::string(to_string(static_cast<Stage>(k)))).get<double>();
    }
    s.total_ms = doc.at("total_ms").get<double>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("stats: ") + e.what());
  }
  return s;
}

Outbound parse_outbound(std::string_view text) {
  const auto doc = parse_object(text);
  const auto type = doc["type"].get<std::string>();
  try {
    const auto session = session_field(doc);
    if (type == "target") return Target{class_field(doc, "class"), session};
    if (type == "prediction") {
      PredictionMsg m;
      m.cls = class_field(doc, "class");
      m.smoothed = class_field(doc, "smoothed");
      const auto& c = doc.at("confidences");
      if (!c.is_array() || c.size() != kClassCount) throw Error(ErrorKind::parse, "message: confidences must hold 9 numbers");
      for (std::size_t k = 0; k < kClassCount; ++k) m.confidences[k] = c[k].get<double>();
      m.session = session;
      return m;
    }
    if (type == "drop") return Drop{parse_drop_reason(doc.at("reason").get<std::string>()), session};
    if (type == "report") return Report{ClassificationReport::from_json(text), session};
    if (type == "stats") return Stats{parse_stats(text), session};
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("message: ") + e.what());
  }
  throw Error(ErrorKind::parse, "message: unknown outbound type '" + type + "'");
}

}  // namespace ocugaze::wire
