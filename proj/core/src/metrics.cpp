#include "ocugaze/metrics.hpp"

#include <cstdio>
#include <string>

#include <json.hpp>

#include "ocugaze/error.hpp"

namespace ocugaze {

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t n = 0;
  for (const auto& row : counts)
    for (auto v : row) n += v;
  return n;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t n = 0;
  for (std::size_t i = 0; i < kClassCount; ++i) n += counts[i][i];
  return n;
}

std::uint64_t ConfusionMatrix::support(int cls) const {
  std::uint64_t n = 0;
  for (auto v : counts[static_cast<std::size_t>(cls - 1)]) n += v;
  return n;
}

std::uint64_t ConfusionMatrix::predicted(int cls) const {
  std::uint64_t n = 0;
  for (const auto& row : counts) n += row[static_cast<std::size_t>(cls - 1)];
  return n;
}

namespace {

void check_labels(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.empty()) throw Error(ErrorKind::parameter, "label sequences must be nonempty");
  if (y_true.size() != y_pred.size()) {
    throw Error(ErrorKind::parameter, "label sequences differ in length (" + std::to_string(y_true.size()) + " vs " +
                                          std::to_string(y_pred.size()) + ")");
  }
  for (auto seq : {y_true, y_pred}) {
    for (int y : seq) {
      if (y < 1 || y > kClassCount) throw Error(ErrorKind::parameter, "label " + std::to_string(y) + " outside 1..9");
    }
  }
}

double ratio(std::uint64_t num, std::uint64_t den, bool& degenerate) {
  if (den == 0) {
    degenerate = true;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred) {
  check_labels(y_true, y_pred);
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    ++cm.counts[static_cast<std::size_t>(y_true[i] - 1)][static_cast<std::size_t>(y_pred[i] - 1)];
  }
  return cm;
}

double accuracy(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.empty()) throw Error(ErrorKind::parameter, "label sequences must be nonempty");
  if (y_true.size() != y_pred.size()) throw Error(ErrorKind::parameter, "label sequences differ in length");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) hits += y_true[i] == y_pred[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(y_true.size());
}

std::array<ClassScores, kClassCount> precision_recall_f1(const ConfusionMatrix& cm) {
  std::array<ClassScores, kClassCount> out{};
  for (int c = 1; c <= kClassCount; ++c) {
    auto& s = out[static_cast<std::size_t>(c - 1)];
    const auto tp = cm.counts[static_cast<std::size_t>(c - 1)][static_cast<std::size_t>(c - 1)];
    const auto fp = cm.predicted(c) - tp;
    const auto fn = cm.support(c) - tp;
    s.support = cm.support(c);
    s.precision = ratio(tp, tp + fp, s.degenerate);
    s.recall = ratio(tp, tp + fn, s.degenerate);
    const double denom = s.precision + s.recall;
    if (denom > 0.0) {
      s.f1 = 2.0 * s.precision * s.recall / denom;
    } else {
      s.f1 = 0.0;
      s.degenerate = true;
    }
  }
  return out;
}

ClassificationReport classification_report(std::span<const int> y_true, std::span<const int> y_pred) {
  return classification_report(confusion_matrix(y_true, y_pred));
}

ClassificationReport classification_report(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error(ErrorKind::parameter, "classification report needs at least one instance");
  ClassificationReport r;
  r.confusion = cm;
  r.per_class = precision_recall_f1(r.confusion);
  r.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(cm.total());

  const auto total = r.confusion.total();
  int present = 0;
  for (int c = 1; c <= kClassCount; ++c) {
    const auto i = static_cast<std::size_t>(c - 1);
    r.present[i] = r.confusion.support(c) > 0 || r.confusion.predicted(c) > 0;
    if (!r.present[i]) continue;
    ++present;
    const auto& s = r.per_class[i];
    r.macro.precision += s.precision;
    r.macro.recall += s.recall;
    r.macro.f1 += s.f1;
    const double w = static_cast<double>(s.support) / static_cast<double>(total);
    r.weighted.precision += w * s.precision;
    r.weighted.recall += w * s.recall;
    r.weighted.f1 += w * s.f1;
  }
  r.macro.precision /= present;
  r.macro.recall /= present;
  r.macro.f1 /= present;
  r.macro.support = r.weighted.support = total;
  return r;
}

std::string ClassificationReport::to_text(int digits) const {
  std::string out;
  char line[160];
  const int w = digits + 7;
  std::snprintf(line, sizeof line, "%-16s %*s %*s %*s %9s\n", "", w, "precision", w, "recall", w, "f1-score",
                "support");
  out += line;
  out += "\n";
  for (int c = 1; c <= kClassCount; ++c) {
    const auto& s = per_class[static_cast<std::size_t>(c - 1)];
    if (!present[static_cast<std::size_t>(c - 1)]) continue;
    std::snprintf(line, sizeof line, "%d %-14s %*.*f %*.*f %*.*f %9llu%s\n", c,
                  std::string(direction_name(gaze_class(c))).c_str(), w, digits, s.precision, w, digits, s.recall, w,
                  digits, s.f1, static_cast<unsigned long long>(s.support), s.degenerate ? "  (degenerate)" : "");
    out += line;
  }
  out += "\n";
  std::snprintf(line, sizeof line, "%-16s %*s %*s %*.*f %9llu\n", "accuracy", w, "", w, "", w, digits, accuracy,
                static_cast<unsigned long long>(macro.support));
  out += line;
  for (const auto& [name, avg] : {std::pair{"macro avg", &macro}, std::pair{"weighted avg", &weighted}}) {
    std::snprintf(line, sizeof line, "%-16s %*.*f %*.*f %*.*f %9llu\n", name, w, digits, avg->precision, w, digits,
                  avg->recall, w, digits, avg->f1, static_cast<unsigned long long>(avg->support));
    out += line;
  }
  return out;
}

std::string ClassificationReport::to_json() const {
  using nlohmann::json;
  json classes = json::array();
  for (int c = 1; c <= kClassCount; ++c) {
    const auto& s = per_class[static_cast<std::size_t>(c - 1)];
    classes.push_back({{"class", c},
                       {"name", direction_name(gaze_class(c))},
                       {"precision", s.precision},
                       {"recall", s.recall},
                       {"f1", s.f1},
                       {"support", s.support},
                       {"present", present[static_cast<std::size_t>(c - 1)]},
                       {"degenerate", s.degenerate}});
  }
  const auto avg = [](const AverageScores& a) {
    return json{{"precision", a.precision}, {"recall", a.recall}, {"f1", a.f1}, {"support", a.support}};
  };
  json doc{{"accuracy", accuracy},
           {"support", confusion.total()},
           {"per_class", std::move(classes)},
           {"macro_avg", avg(macro)},
           {"weighted_avg", avg(weighted)},
           {"confusion", confusion.counts}};
  return doc.dump();
}

ClassificationReport ClassificationReport::from_json(std::string_view text) {
  ConfusionMatrix cm;
  try {
    const auto doc = nlohmann::json::parse(text);
    const auto& rows = doc.at("confusion");
    if (!rows.is_array() || rows.size() != kClassCount) throw Error(ErrorKind::parse, "report: confusion must be 9x9");
    for (std::size_t i = 0; i < kClassCount; ++i) {
      const auto& row = rows.at(i);
      if (!row.is_array() || row.size() != kClassCount) throw Error(ErrorKind::parse, "report: confusion must be 9x9");
      for (std::size_t j = 0; j < kClassCount; ++j) cm.counts[i][j] = row.at(j).get<std::uint64_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, std::string("report: ") + e.what());
  }
  return classification_report(cm);
}

void ReportAccumulator::add(int y_true, int y_pred) {
  if (y_true < 1 || y_true > kClassCount || y_pred < 1 || y_pred > kClassCount) {
    throw Error(ErrorKind::parameter, "labels must lie in 1..9");
  }
  ++confusion_.counts[static_cast<std::size_t>(y_true - 1)][static_cast<std::size_t>(y_pred - 1)];
}

ClassificationReport ReportAccumulator::report() const { return classification_report(confusion_); }

}  // namespace ocugaze
