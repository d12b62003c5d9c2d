#include "ocugaze/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "ocugaze/error.hpp"

namespace ocugaze {

namespace {

void append_number(std::string& out, double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.9g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void row_error(std::size_t line, const std::string& what) {
  throw Error(ErrorKind::parse, "dataset row " + std::to_string(line) + ": " + what);
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

std::string format_row(const LabeledInstance& instance) {
  std::string out;
  for (double v : instance.features.values()) {
    append_number(out, v);
    out.push_back(',');
  }
  out += std::to_string(label(instance.label));
  return out;
}

std::string format_dataset(std::span<const LabeledInstance> instances) {
  std::string out(kDatasetHeader);
  out.push_back('\n');
  for (const auto& inst : instances) {
    out += format_row(inst);
    out.push_back('\n');
  }
  return out;
}

std::vector<LabeledInstance> parse_dataset(std::string_view text) {
  std::vector<LabeledInstance> out;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (!header_seen) {
      if (line != kDatasetHeader) {
        row_error(line_no, "header must be \"" + std::string(kDatasetHeader) + "\"");
      }
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;

    std::array<double, 7> cells{};
    std::size_t col = 0;
    while (true) {
      const auto comma = line.find(',');
      const auto cell = trim(line.substr(0, comma));
      if (col >= cells.size()) row_error(line_no, "expected 7 columns");
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        row_error(line_no, "non-numeric cell '" + std::string(cell) + "' in column " + std::to_string(col + 1));
      }
      cells[col++] = v;
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    if (col != cells.size()) row_error(line_no, "expected 7 columns, found " + std::to_string(col));
    const double cls = cells[6];
    if (cls != std::floor(cls) || cls < 1 || cls > kClassCount) {
      row_error(line_no, "class label must be an integer in 1..9");
    }
    LabeledInstance inst;
    inst.features = OcularFeatureVector::from(std::span<const double, 6>(cells.data(), 6));
    inst.label = gaze_class(static_cast<int>(cls));
    out.push_back(std::move(inst));
  }
  if (!header_seen) row_error(1, "missing header");
  return out;
}

void write_dataset(const std::filesystem::path& path, std::span<const LabeledInstance> instances) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << format_dataset(instances);
}

void append_dataset(const std::filesystem::path& path, std::span<const LabeledInstance> instances) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorKind::io, "cannot append to " + path.string());
  if (fresh) out << kDatasetHeader << '\n';
  for (const auto& inst : instances) out << format_row(inst) << '\n';
}

std::vector<LabeledInstance> read_dataset(const std::filesystem::path& path) { return parse_dataset(slurp(path)); }

std::filesystem::path metadata_path(const std::filesystem::path& dataset) {
  auto p = dataset;
  p += ".meta.json";
  return p;
}

void append_session_metadata(const std::filesystem::path& dataset, const SessionMetadata& session) {
  using nlohmann::json;
  const auto path = metadata_path(dataset);
  json doc = {{"sessions", json::array()}};
  if (std::filesystem::exists(path)) {
    try {
      doc = json::parse(slurp(path));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::parse, "session metadata " + path.string() + ": " + e.what());
    }
  }
  doc["sessions"].push_back({{"session_id", session.session_id},
                             {"subject", session.subject},
                             {"frame_rate", session.frame_rate},
                             {"first_row", session.first_row},
                             {"rows", session.rows},
                             {"timestamps_ms", session.timestamps_ms}});
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << doc.dump(1) << '\n';
}

std::vector<SessionMetadata> read_session_metadata(const std::filesystem::path& dataset) {
  using nlohmann::json;
  const auto path = metadata_path(dataset);
  std::vector<SessionMetadata> out;
  if (!std::filesystem::exists(path)) return out;
  try {
    const auto doc = json::parse(slurp(path));
    for (const auto& s : doc.at("sessions")) {
      SessionMetadata m;
      m.session_id = s.at("session_id").get<std::string>();
      m.subject = s.at("subject").get<std::string>();
      m.frame_rate = s.at("frame_rate").get<double>();
      m.first_row = s.at("first_row").get<std::size_t>();
      m.rows = s.at("rows").get<std::size_t>();
      m.timestamps_ms = s.at("timestamps_ms").get<std::vector<std::int64_t>>();
      out.push_back(std::move(m));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, "session metadata " + path.string() + ": " + e.what());
  }
  return out;
}

std::array<std::size_t, kClassCount> class_counts(std::span<const LabeledInstance> instances) {
  std::array<std::size_t, kClassCount> counts{};
  for (const auto& inst : instances) ++counts[static_cast<std::size_t>(label(inst.label) - 1)];
  return counts;
}

namespace {

std::array<std::vector<std::size_t>, kClassCount> shuffled_by_class(std::span<const LabeledInstance> instances,
                                                                     std::uint64_t seed) {
  std::array<std::vector<std::size_t>, kClassCount> by_class;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    by_class[static_cast<std::size_t>(label(instances[i].label) - 1)].push_back(i);
  }
  std::mt19937_64 rng(seed);
  for (auto& members : by_class) std::shuffle(members.begin(), members.end(), rng);
  return by_class;
}

}  // namespace

Split split(std::span<const LabeledInstance> instances, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw Error(ErrorKind::parameter, "train fraction must lie strictly between 0 and 1");
  }
  const auto by_class = shuffled_by_class(instances, spec.seed);

  std::array<std::size_t, kClassCount> test_counts{};
  for (std::size_t c = 0; c < kClassCount; ++c) {
    const double n = static_cast<double>(by_class[c].size());
    test_counts[c] = std::min(by_class[c].size(), static_cast<std::size_t>(std::lround(n * (1.0 - spec.train_fraction))));
  }

  if (spec.balanced) {
    std::string offending;
    std::size_t common = std::numeric_limits<std::size_t>::max();
    for (std::size_t c = 0; c < kClassCount; ++c) {
      if (by_class[c].empty()) continue;
      if (by_class[c].size() < 10) {
        offending += (offending.empty() ? "" : ", ") + std::to_string(c + 1) + " (" +
                     std::to_string(by_class[c].size()) + " rows)";
      }
      common = std::min(common, test_counts[c]);
    }
    if (!offending.empty()) {
      throw Error(ErrorKind::split, "balanced split needs at least 10 rows per class; short classes: " + offending);
    }
    for (std::size_t c = 0; c < kClassCount; ++c) {
      if (!by_class[c].empty()) test_counts[c] = common;
    }
  }

  Split out;
  for (std::size_t c = 0; c < kClassCount; ++c) {
    const auto& members = by_class[c];
    out.test_index.insert(out.test_index.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(test_counts[c]));
    out.train_index.insert(out.train_index.end(), members.begin() + static_cast<std::ptrdiff_t>(test_counts[c]), members.end());
  }
  std::sort(out.train_index.begin(), out.train_index.end());
  std::sort(out.test_index.begin(), out.test_index.end());
  for (auto i : out.train_index) out.train.push_back(instances[i]);
  for (auto i : out.test_index) out.test.push_back(instances[i]);
  return out;
}

std::vector<LabeledInstance> balance(std::span<const LabeledInstance> instances, std::uint64_t seed) {
  const auto by_class = shuffled_by_class(instances, seed);
  std::size_t common = std::numeric_limits<std::size_t>::max();
  for (const auto& members : by_class) {
    if (!members.empty()) common = std::min(common, members.size());
  }
  std::vector<std::size_t> keep;
  for (const auto& members : by_class) {
    const auto n = std::min(common, members.size());
    keep.insert(keep.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n));
  }
  std::sort(keep.begin(), keep.end());
  std::vector<LabeledInstance> out;
  out.reserve(keep.size());
  for (auto i : keep) out.push_back(instances[i]);
  return out;
}

const std::array<ClassFeatureRow, kClassCount>& reference_feature_rows() {
  static const std::array<ClassFeatureRow, kClassCount> rows{{
      {0.36, 0.277538696, 0.430383655, 3.08, -2, 11},
      {0.35, 0.316103573, 0.462965465, 2.76, -7, 10},
      {0.36, 0.312934426, 0.436084602, -1.62, -8, 7},
      {0.31, 0.276095344, 0.391149739, -2.82, -8, 7},
      {0.27, 0.243460121, 0.338916135, -5.2, -10, 1},
      {0.27, 0.221078406, 0.296966443, 0.68, -5, 3},
      {0.26, 0.217213378, 0.297732295, 9.68, 1, 13},
      {0.28, 0.24662586, 0.348253656, 8.74, -5, 12},
      {0.32, 0.248078475, 0.398217235, 1.1, -7, 9},
  }};
  return rows;
}

std::vector<LabeledInstance> synthesize(const SynthSpec& spec, const std::array<ClassFeatureRow, kClassCount>& rows) {
  if (spec.per_class < 0) throw Error(ErrorKind::parameter, "per-class count must be non-negative");
  if (spec.sigma_ear < 0.0 || spec.sigma_disp < 0.0) throw Error(ErrorKind::parameter, "sigma must be non-negative");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<LabeledInstance> out;
  out.reserve(static_cast<std::size_t>(spec.per_class) * kClassCount);
  for (int c = 0; c < kClassCount; ++c) {
    const auto& row = rows[static_cast<std::size_t>(c)];
    for (int i = 0; i < spec.per_class; ++i) {
      // Six draws per instance whatever the sigmas, so seeds stay comparable.
      const double ear = row.aspect_ratio + spec.sigma_ear * unit(rng);
      const double disp = row.displacement + spec.sigma_disp * unit(rng);
      const double lo_r = row.min_r + spec.sigma_ear * unit(rng);
      const double hi_r = row.max_r + spec.sigma_ear * unit(rng);
      const double lo_d = row.min_d + spec.sigma_disp * unit(rng);
      const double hi_d = row.max_d + spec.sigma_disp * unit(rng);
      LabeledInstance inst;
      inst.features = {ear, std::min(lo_r, ear), std::max(hi_r, ear), disp, std::min(lo_d, disp), std::max(hi_d, disp)};
      inst.label = gaze_class(c + 1);
      out.push_back(std::move(inst));
    }
  }
  return out;
}

}  // namespace ocugaze
