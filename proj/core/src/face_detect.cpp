#include "ocugaze/face_detect.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "ocugaze/error.hpp"

namespace ocugaze {

namespace pt = boost::property_tree;

std::size_t Cascade::stump_count() const {
  std::size_t n = 0;
  for (const auto& s : stages) n += s.stumps.size();
  return n;
}

namespace {

// Innermost element left open when the document ends early.
std::string unclosed_element(std::string_view xml) {
  std::vector<std::string> open;
  std::size_t pos = 0;
  while ((pos = xml.find('<', pos)) != std::string_view::npos) {
    if (xml.substr(pos, 4) == "<!--") {
      const auto end = xml.find("-->", pos);
      if (end == std::string_view::npos) return "comment";
      pos = end + 3;
      continue;
    }
    const auto end = xml.find('>', pos);
    if (end == std::string_view::npos) break;
    std::string_view tag = xml.substr(pos + 1, end - pos - 1);
    pos = end + 1;
    if (tag.empty() || tag.front() == '?' || tag.front() == '!') continue;
    if (tag.front() == '/') {
      if (!open.empty()) open.pop_back();
    } else if (tag.back() != '/') {
      open.emplace_back(tag.substr(0, tag.find_first_of(" \t\r\n")));
    }
  }
  if (open.empty()) return {};
  std::string path;
  for (const auto& name : open) path += (path.empty() ? "" : "/") + name;
  return path;
}

const pt::ptree& require(const pt::ptree& node, const std::string& key, const std::string& path) {
  const auto child = node.get_child_optional(key);
  if (!child) throw Error(ErrorKind::parse, "cascade: missing element " + path + "/" + key);
  return *child;
}

std::vector<double> numbers(const pt::ptree& node, const std::string& path) {
  std::istringstream in(node.get_value<std::string>());
  std::vector<double> out;
  double v = 0.0;
  while (in >> v) out.push_back(v);
  if (!in.eof()) throw Error(ErrorKind::parse, "cascade: non-numeric content in " + path);
  return out;
}

template <typename T>
T scalar(const pt::ptree& node, const std::string& key, const std::string& path) {
  const auto& child = require(node, key, path);
  const auto value = child.get_value_optional<T>();
  if (!value) throw Error(ErrorKind::parse, "cascade: bad value in " + path + "/" + key);
  return *value;
}

// Items of an OpenCV sequence node ("_" children), in order.
std::vector<const pt::ptree*> items(const pt::ptree& node) {
  std::vector<const pt::ptree*> out;
  for (const auto& [key, child] : node) {
    if (key == "_") out.push_back(&child);
  }
  return out;
}

}  // namespace

Cascade load_cascade(std::string_view xml) {
  if (xml.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw Error(ErrorKind::parse, "cascade: empty file");
  }
  pt::ptree doc;
  {
    std::istringstream in{std::string(xml)};
    try {
      pt::read_xml(in, doc, pt::xml_parser::trim_whitespace);
    } catch (const pt::xml_parser_error& e) {
      const auto open = unclosed_element(xml);
      std::string msg = "cascade: malformed XML at line " + std::to_string(e.line()) + ": " + e.message();
      if (!open.empty()) msg += " (unterminated element " + open + ")";
      throw Error(ErrorKind::parse, msg);
    }
  }

  const auto& storage = require(doc, "opencv_storage", "");
  const auto cascade_node = storage.get_child_optional("cascade");
  if (!cascade_node) {
    for (const auto& [key, child] : storage) {
      if (child.get_optional<std::string>("<xmlattr>.type_id") == std::string("opencv-haar-classifier")) {
        throw Error(ErrorKind::unsupported_format, "cascade: legacy opencv-haar-classifier layout is not supported");
      }
    }
    throw Error(ErrorKind::parse, "cascade: missing element /opencv_storage/cascade");
  }
  const auto& root = *cascade_node;
  const std::string base = "/opencv_storage/cascade";

  if (scalar<std::string>(root, "stageType", base) != "BOOST") {
    throw Error(ErrorKind::unsupported_format, "cascade: stageType must be BOOST");
  }
  if (scalar<std::string>(root, "featureType", base) != "HAAR") {
    throw Error(ErrorKind::unsupported_format, "cascade: featureType must be HAAR");
  }

  Cascade cascade;
  cascade.window_width = scalar<int>(root, "width", base);
  cascade.window_height = scalar<int>(root, "height", base);
  if (cascade.window_width <= 0 || cascade.window_height <= 0) {
    throw Error(ErrorKind::parse, "cascade: window size must be positive");
  }
  const int declared_stages = scalar<int>(root, "stageNum", base);

  const auto stage_nodes = items(require(root, "stages", base));
  for (std::size_t si = 0; si < stage_nodes.size(); ++si) {
    const std::string stage_path = base + "/stages/_[" + std::to_string(si) + "]";
    const auto& stage_node = *stage_nodes[si];
    CascadeStage stage;
    stage.threshold = scalar<double>(stage_node, "stageThreshold", stage_path);
    const auto weak = items(require(stage_node, "weakClassifiers", stage_path));
    for (std::size_t wi = 0; wi < weak.size(); ++wi) {
      const std::string weak_path = stage_path + "/weakClassifiers/_[" + std::to_string(wi) + "]";
      const auto nodes = numbers(require(*weak[wi], "internalNodes", weak_path), weak_path + "/internalNodes");
      const auto leaves = numbers(require(*weak[wi], "leafValues", weak_path), weak_path + "/leafValues");
      if (nodes.size() != 4 || leaves.size() != 2) {
        if (nodes.size() % 4 == 0 && !nodes.empty()) {
          throw Error(ErrorKind::unsupported_format,
                      "cascade: " + weak_path + " is a tree of depth > 1; only stump cascades are supported");
        }
        throw Error(ErrorKind::parse, "cascade: malformed weak classifier at " + weak_path);
      }
      Stump stump;
      stump.feature = static_cast<int>(nodes[2]);
      stump.threshold = nodes[3];
      stump.left = leaves[0];
      stump.right = leaves[1];
      stage.stumps.push_back(stump);
    }
    if (stage.stumps.empty()) throw Error(ErrorKind::parse, "cascade: stage without classifiers at " + stage_path);
    cascade.stages.push_back(std::move(stage));
  }
  if (cascade.stages.empty()) throw Error(ErrorKind::parse, "cascade: no stages");
  if (static_cast<int>(cascade.stages.size()) != declared_stages) {
    throw Error(ErrorKind::parse, "cascade: stageNum says " + std::to_string(declared_stages) + " but " +
                                      std::to_string(cascade.stages.size()) + " stages are present");
  }

  const auto feature_nodes = items(require(root, "features", base));
  for (std::size_t fi = 0; fi < feature_nodes.size(); ++fi) {
    const std::string feature_path = base + "/features/_[" + std::to_string(fi) + "]";
    const auto& fnode = *feature_nodes[fi];
    if (const auto tilted = fnode.get_optional<int>("tilted"); tilted && *tilted != 0) {
      throw Error(ErrorKind::unsupported_format, "cascade: tilted feature at " + feature_path);
    }
    HaarFeature feature;
    const auto rects = items(require(fnode, "rects", feature_path));
    for (std::size_t ri = 0; ri < rects.size(); ++ri) {
      const std::string rect_path = feature_path + "/rects/_[" + std::to_string(ri) + "]";
      const auto v = numbers(*rects[ri], rect_path);
      if (v.size() != 5) throw Error(ErrorKind::parse, "cascade: rectangle needs 5 values at " + rect_path);
      HaarRect r{static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2]), static_cast<int>(v[3]), v[4]};
      if (r.x < 0 || r.y < 0 || r.w <= 0 || r.h <= 0 || r.x + r.w > cascade.window_width ||
          r.y + r.h > cascade.window_height) {
        throw Error(ErrorKind::parse, "cascade: rectangle outside the base window at " + rect_path);
      }
      feature.rects.push_back(r);
    }
    if (feature.rects.size() < 2 || feature.rects.size() > 3) {
      throw Error(ErrorKind::parse, "cascade: feature needs 2 or 3 rectangles at " + feature_path);
    }
    cascade.features.push_back(std::move(feature));
  }

  for (std::size_t si = 0; si < cascade.stages.size(); ++si) {
    for (const auto& stump : cascade.stages[si].stumps) {
      if (stump.feature < 0 || static_cast<std::size_t>(stump.feature) >= cascade.features.size()) {
        throw Error(ErrorKind::parse, "cascade: stage " + std::to_string(si) + " references missing feature " +
                                          std::to_string(stump.feature));
      }
    }
  }
  return cascade;
}

Cascade load_cascade_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open cascade file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_cascade(buffer.str());
}

ScaledCascade::ScaledCascade(const Cascade& cascade, double scale)
    : base_(&cascade), scale_(scale), window_(static_cast<int>(std::lround(cascade.window_width * scale))) {
  const int border = static_cast<int>(std::lround(scale));
  norm_rect_ = {border, border, static_cast<int>(std::lround((cascade.window_width - 2) * scale)),
                static_cast<int>(std::lround((cascade.window_height - 2) * scale))};
  inv_area_ = 1.0 / static_cast<double>(norm_rect_.area());

  features_.reserve(cascade.features.size());
  for (const auto& f : cascade.features) {
    Feature scaled;
    scaled.count = static_cast<int>(f.rects.size());
    double weighted_area = 0.0;
    for (int k = 0; k < scaled.count; ++k) {
      const auto& r = f.rects[static_cast<std::size_t>(k)];
      HaarRect s{static_cast<int>(std::lround(r.x * scale)), static_cast<int>(std::lround(r.y * scale)),
                 static_cast<int>(std::lround(r.w * scale)), static_cast<int>(std::lround(r.h * scale)),
                 r.weight * inv_area_};
      s.w = std::max(s.w, 1);
      s.h = std::max(s.h, 1);
      s.w = std::min(s.w, window_ - s.x);
      s.h = std::min(s.h, window_ - s.y);
      if (k > 0) weighted_area += s.weight * static_cast<double>(s.w) * s.h;
      scaled.rects[static_cast<std::size_t>(k)] = s;
    }
    auto& first = scaled.rects[0];
    first.weight = -weighted_area / (static_cast<double>(first.w) * first.h);
    features_.push_back(scaled);
  }
}

namespace {

double window_stddev(const ScaledCascade& cascade, const IntegralPair& tables, int x, int y) {
  const auto& nr = cascade.norm_rect();
  const double sum = static_cast<double>(tables.sum.rect_sum(x + nr.x, y + nr.y, nr.w, nr.h));
  const double sq = static_cast<double>(tables.squared.rect_sum(x + nr.x, y + nr.y, nr.w, nr.h));
  const double mean = sum * cascade.inv_norm_area();
  const double var = sq * cascade.inv_norm_area() - mean * mean;
  return var > 0.0 ? std::sqrt(var) : 0.0;
}

double feature_value(const ScaledCascade::Feature& f, const IntegralImage& sum, int x, int y) {
  double value = 0.0;
  for (int k = 0; k < f.count; ++k) {
    const auto& r = f.rects[static_cast<std::size_t>(k)];
    value += r.weight * static_cast<double>(sum.rect_sum(x + r.x, y + r.y, r.w, r.h));
  }
  return value;
}

double stage_sum(const CascadeStage& stage, const ScaledCascade& cascade, const IntegralImage& sum, int x, int y,
                 double stddev) {
  double total = 0.0;
  const auto& features = cascade.features();
  for (const auto& stump : stage.stumps) {
    const double value = feature_value(features[static_cast<std::size_t>(stump.feature)], sum, x, y);
    total += value < stump.threshold * stddev ? stump.left : stump.right;
  }
  return total;
}

}  // namespace

bool evaluate_window(const ScaledCascade& cascade, const IntegralPair& tables, int x, int y) {
  const double stddev = window_stddev(cascade, tables, x, y);
  if (stddev < kMinWindowStddev) return false;
  for (const auto& stage : cascade.base().stages) {
    if (stage_sum(stage, cascade, tables.sum, x, y, stddev) < stage.threshold) return false;
  }
  return true;
}

WindowEvaluation trace_window(const ScaledCascade& cascade, const IntegralPair& tables, int x, int y,
                              bool early_exit) {
  WindowEvaluation eval;
  eval.stddev = window_stddev(cascade, tables, x, y);
  if (eval.stddev < kMinWindowStddev) return eval;
  eval.passed = true;
  for (const auto& stage : cascade.base().stages) {
    const double s = stage_sum(stage, cascade, tables.sum, x, y, eval.stddev);
    eval.stage_sums.push_back(s);
    ++eval.stages_evaluated;
    if (s < stage.threshold) {
      eval.passed = false;
      if (early_exit) break;
    }
  }
  return eval;
}

std::vector<Rect> scan_windows(const GrayFrame& frame, const Cascade& cascade, int min_size,
                               const DetectorParams& params) {
  if (frame.width() < min_size || frame.height() < min_size) {
    throw Error(ErrorKind::dimension, "frame is smaller than the minimum face size");
  }
  if (params.scale_factor <= 1.0) throw Error(ErrorKind::parameter, "scale factor must exceed 1");

  const auto tables = IntegralPair::of(frame);
  std::vector<Rect> hits;
  const int limit = std::min(frame.width(), frame.height());
  double scale = std::max(1.0, static_cast<double>(min_size) / cascade.window_width);
  for (; std::lround(cascade.window_width * scale) <= limit; scale *= params.scale_factor) {
    const ScaledCascade scaled(cascade, scale);
    const int win = scaled.window_size();
    const int step = std::max(1, static_cast<int>(std::lround(scale * 2.0)));
    for (int y = 0; y + win <= frame.height(); y += step) {
      for (int x = 0; x + win <= frame.width(); x += step) {
        if (evaluate_window(scaled, tables, x, y)) hits.push_back({x, y, win, win});
      }
    }
  }
  return hits;
}

std::vector<FaceBox> group_detections(const std::vector<Rect>& raw, double merge_iou) {
  std::vector<std::size_t> parent(raw.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < raw.size(); ++i) {
    for (std::size_t j = i + 1; j < raw.size(); ++j) {
      if (intersection_over_union(raw[i], raw[j]) >= merge_iou) {
        const auto a = find(i);
        const auto b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }

  struct Acc {
    double x = 0, y = 0, w = 0;
    int n = 0;
  };
  std::vector<Acc> acc(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto& a = acc[find(i)];
    a.x += raw[i].x;
    a.y += raw[i].y;
    a.w += raw[i].w;
    ++a.n;
  }
  std::vector<FaceBox> groups;
  for (const auto& a : acc) {
    if (a.n == 0) continue;
    const int side = static_cast<int>(std::lround(a.w / a.n));
    groups.push_back({static_cast<int>(std::lround(a.x / a.n)), static_cast<int>(std::lround(a.y / a.n)), side, side, a.n});
  }
  return groups;
}

std::optional<FaceBox> detect_face(const GrayFrame& frame, const Cascade& cascade, int min_size,
                                   const DetectorParams& params) {
  const auto groups = group_detections(scan_windows(frame, cascade, min_size, params), params.merge_iou);
  const FaceBox* best = nullptr;
  for (const auto& g : groups) {
    if (g.score < params.min_group) continue;
    if (!best || g.score > best->score || (g.score == best->score && g.rect().area() > best->rect().area()) ||
        (g.score == best->score && g.rect().area() == best->rect().area() &&
         std::tie(g.y, g.x) < std::tie(best->y, best->x))) {
      best = &g;
    }
  }
  if (!best) return std::nullopt;
  FaceBox box = *best;
  const int side = std::min({box.w, frame.width(), frame.height()});
  box.w = box.h = side;
  box.x = std::clamp(box.x, 0, frame.width() - side);
  box.y = std::clamp(box.y, 0, frame.height() - side);
  return box;
}

}  // namespace ocugaze
