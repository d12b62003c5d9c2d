#include "ocugaze/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "ocugaze/error.hpp"

namespace ocugaze {
namespace {

namespace pt = boost::property_tree;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Drops '#' comments (outside double quotes); boost's parser handles ';'
// only at line start.
std::string strip_comments(std::string_view text) {
  std::string out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    bool quoted = false;
    std::size_t cut = line.size();
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (!quoted && (line[i] == '#' || (line[i] == ';' && i > 0))) {
        cut = i;
        break;
      }
    }
    out += line.substr(0, cut);
    out += '\n';
  }
  return out;
}

std::string unquote(std::string s) {
  s = trim(s);
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\''))) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const char* what) {
  throw Error(ErrorKind::configuration, "config: " + key + " = " + value + ": " + what);
}

double to_double(const std::string& key, const std::string& raw) {
  const auto v = unquote(raw);
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) bad(key, raw, "expected a number");
  return out;
}

long long to_integer(const std::string& key, const std::string& raw) {
  const auto v = unquote(raw);
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) bad(key, raw, "expected an integer");
  return out;
}

int to_int(const std::string& key, const std::string& raw) {
  const auto v = to_integer(key, raw);
  if (v < -1000000000LL || v > 1000000000LL) bad(key, raw, "out of range");
  return static_cast<int>(v);
}

std::vector<int> to_int_list(const std::string& key, const std::string& raw) {
  auto v = unquote(raw);
  if (!v.empty() && v.front() == '[') {
    if (v.back() != ']') bad(key, raw, "unterminated list");
    v = v.substr(1, v.size() - 2);
  }
  std::vector<int> out;
  std::istringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(to_int(key, trim(item)));
  }
  return out;
}

}  // namespace

AppConfig parse_config(std::string_view text) {
  pt::ptree tree;
  try {
    std::istringstream in(strip_comments(text));
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorKind::configuration, std::string("config: line ") + std::to_string(e.line()) + ": " + e.message());
  }

  AppConfig c;
  auto& p = c.pipeline;
  const auto apply = [&](const std::string& section, const std::string& name, const std::string& value) {
    const std::string key = section.empty() ? name : section + "." + name;
    if (key == "detector.cascade") c.cascade_path = unquote(value);
    else if (key == "detector.min_face_size") p.min_face_size = to_int(key, value);
    else if (key == "detector.scale_factor") p.detector.scale_factor = to_double(key, value);
    else if (key == "detector.merge_iou") p.detector.merge_iou = to_double(key, value);
    else if (key == "detector.min_group") p.detector.min_group = to_int(key, value);
    else if (key == "roi.eye") {
      try {
        p.eye = parse_eye_side(unquote(value));
      } catch (const Error&) {
        bad(key, value, "expected left or right");
      }
    }
    else if (key == "roi.top") p.roi.top = to_double(key, value);
    else if (key == "roi.bottom") p.roi.bottom = to_double(key, value);
    else if (key == "roi.left_eye_begin") p.roi.left_eye_begin = to_double(key, value);
    else if (key == "roi.left_eye_end") p.roi.left_eye_end = to_double(key, value);
    else if (key == "roi.right_eye_begin") p.roi.right_eye_begin = to_double(key, value);
    else if (key == "roi.right_eye_end") p.roi.right_eye_end = to_double(key, value);
    else if (key == "roi.target_height") p.normalize.target_height = to_int(key, value);
    else if (key == "roi.stretch_below_mean") p.normalize.stretch_below_mean = to_double(key, value);
    else if (key == "features.window") p.feature_window = to_int(key, value);
    else if (key == "smoothing.window") p.smoothing_window = to_int(key, value);
    else if (key == "net.hidden_sizes") c.train.hidden_sizes = to_int_list(key, value);
    else if (key == "train.learning_rate") c.train.learning_rate = to_double(key, value);
    else if (key == "train.momentum") c.train.momentum = to_double(key, value);
    else if (key == "train.batch_size") c.train.batch_size = to_int(key, value);
    else if (key == "train.epochs") c.train.epochs = to_int(key, value);
    else if (key == "train.seed") {
      const auto s = to_integer(key, value);
      if (s < 0) bad(key, value, "seed must be non-negative");
      c.train.seed = static_cast<std::uint64_t>(s);
    }
    else if (key == "session.dwell_s") c.session.dwell_s = to_double(key, value);
    else if (key == "session.discard_s") c.session.discard_s = to_double(key, value);
    else throw Error(ErrorKind::configuration, "config: unknown key '" + key + "'");
  };

  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      apply("", name, node.data());
    } else {
      for (const auto& [k, v] : node) apply(name, k, v.data());
    }
  }

  const auto& r = p.roi;
  const auto in_unit = [](double a, double b) { return 0.0 <= a && a < b && b <= 1.0; };
  if (!in_unit(r.top, r.bottom) || !in_unit(r.left_eye_begin, r.left_eye_end) ||
      !in_unit(r.right_eye_begin, r.right_eye_end)) {
    throw Error(ErrorKind::configuration, "config: ROI proportions must satisfy 0 <= begin < end <= 1");
  }
  if (p.min_face_size < 24) throw Error(ErrorKind::configuration, "config: min_face_size must be at least 24");
  if (!(p.detector.scale_factor > 1.0)) throw Error(ErrorKind::configuration, "config: scale_factor must exceed 1");
  if (p.detector.min_group < 1) throw Error(ErrorKind::configuration, "config: min_group must be positive");
  if (p.normalize.target_height < 8) throw Error(ErrorKind::configuration, "config: target_height must be at least 8");
  if (p.feature_window < 1) throw Error(ErrorKind::configuration, "config: features.window must be positive");
  if (p.smoothing_window < 1) throw Error(ErrorKind::configuration, "config: smoothing.window must be positive");
  if (!(c.session.dwell_s > c.session.discard_s) || c.session.discard_s < 0.0) {
    throw Error(ErrorKind::configuration, "config: need 0 <= discard_s < dwell_s");
  }
  try {
    c.train.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::configuration, std::string("config: ") + e.what());
  }
  return c;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open config file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  AppConfig c = parse_config(buffer.str());
  if (!c.cascade_path.empty() && c.cascade_path.is_relative()) c.cascade_path = path.parent_path() / c.cascade_path;
  return c;
}

std::filesystem::path default_cascade_path() {
  static constexpr const char* kName = "haarcascade_frontalface_default.xml";
  if (const char* env = std::getenv("OCUGAZE_CASCADE"); env && *env) return env;
  std::error_code ec;
#ifdef OCUGAZE_SOURCE_DATA_DIR
  if (auto p = std::filesystem::path(OCUGAZE_SOURCE_DATA_DIR) / kName; std::filesystem::exists(p, ec)) return p;
#endif
#ifdef OCUGAZE_INSTALL_DATA_DIR
  if (auto p = std::filesystem::path(OCUGAZE_INSTALL_DATA_DIR) / kName; std::filesystem::exists(p, ec)) return p;
#endif
  return kName;
}

}  // namespace ocugaze
