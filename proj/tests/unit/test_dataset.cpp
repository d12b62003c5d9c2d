#include <doctest.h>

#include <fstream>
#include <set>

#include "ocugaze/dataset.hpp"
#include "ocugaze/error.hpp"
#include "test_support.hpp"

using namespace ocugaze;

namespace {

std::vector<LabeledInstance> counted(const std::array<int, kClassCount>& per_class) {
  std::vector<LabeledInstance> out;
  int serial = 0;
  for (int c = 0; c < kClassCount; ++c) {
    for (int i = 0; i < per_class[static_cast<std::size_t>(c)]; ++i) {
      LabeledInstance inst;
      inst.features = {0.01 * serial, 0, 0, static_cast<double>(serial), 0, 0};
      inst.label = gaze_class(c + 1);
      out.push_back(inst);
      ++serial;
    }
  }
  return out;
}

int parse_line(const std::string& text) {
  try {
    parse_dataset(text);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::parse);
    const std::string msg = e.what();
    const auto at = msg.find("row ");
    if (at == std::string::npos) return -1;
    return std::stoi(msg.substr(at + 4));
  }
  return 0;
}

}  // namespace

TEST_SUITE("dataset") {
  TEST_CASE("csv round trip") {
    SynthSpec spec;
    spec.per_class = 7;
    const auto data = synthesize(spec);
    const auto text = format_dataset(data);
    CHECK(text.rfind(std::string(kDatasetHeader) + "\n", 0) == 0);
    const auto back = parse_dataset(text);
    REQUIRE(back.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      CHECK(back[i].label == data[i].label);
      const auto a = data[i].features.values();
      const auto b = back[i].features.values();
      for (std::size_t k = 0; k < 6; ++k) CHECK(b[k] == doctest::Approx(a[k]).epsilon(1e-8));
    }
    CHECK(format_dataset(back) == text);
  }

  TEST_CASE("row format") {
    LabeledInstance inst;
    inst.features = {0.36, 0.25, 0.5, -2.5, -8, 11};
    inst.label = GazeClass::east;
    CHECK(format_row(inst) == "0.36,0.25,0.5,-2.5,-8,11,4");
  }

  TEST_CASE("parse errors name the line") {
    const std::string h = std::string(kDatasetHeader) + "\n";
    CHECK(parse_line("a,b,c\n1,2,3,4,5,6,1\n") == 1);
    CHECK(parse_line("") == 1);
    CHECK(parse_line(h + "0.3,0.2,0.4,1,-2,3,1\n0.3,0.2,0.4,1,-2,3\n") == 3);
    CHECK(parse_line(h + "0.3,0.2,0.4,1,-2,3,1,9\n") == 2);
    CHECK(parse_line(h + "0.3,x,0.4,1,-2,3,1\n") == 2);
    CHECK(parse_line(h + "0.3,0.2,0.4,1,-2,3,10\n") == 2);
    CHECK(parse_line(h + "0.3,0.2,0.4,1,-2,3,2.5\n") == 2);
    CHECK(parse_line(h + "0.3,0.2,0.4,1,-2,3,0\n") == 2);
    CHECK(parse_line(h + "0.3,0.2,0.4,1,-2,,1\n") == 2);
    CHECK(parse_dataset(h + "\n0.3,0.2,0.4,1,-2,3,1\r\n\n").size() == 1);
    CHECK(parse_dataset(h).empty());
  }

  TEST_CASE("append and sidecar") {
    const auto dir = testing::scratch_dir("dataset_io");
    const auto path = dir / "rec.csv";
    const auto a = counted({2, 0, 0, 0, 0, 0, 0, 0, 1});
    append_dataset(path, a);
    append_dataset(path, a);
    CHECK(read_dataset(path).size() == 6);

    SessionMetadata s{"s-1", "anna", 30.0, 0, 3, {0, 33, 66}};
    append_session_metadata(path, s);
    s.session_id = "s-2";
    s.first_row = 3;
    append_session_metadata(path, s);
    const auto meta = read_session_metadata(path);
    REQUIRE(meta.size() == 2);
    CHECK(meta[1].session_id == "s-2");
    CHECK(meta[1].first_row == 3);
    CHECK(meta[0].timestamps_ms == std::vector<std::int64_t>{0, 33, 66});
    CHECK(metadata_path(path).filename() == "rec.csv.meta.json");
    CHECK(read_session_metadata(dir / "none.csv").empty());

    std::ofstream(metadata_path(dir / "bad.csv")) << "{oops";
    CHECK_THROWS_AS(read_session_metadata(dir / "bad.csv"), Error);
    try {
      read_dataset(dir / "none.csv");
      FAIL("expected io error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::io);
    }
  }

  TEST_CASE("stratified split") {
    const auto data = counted({40, 40, 40, 40, 40, 40, 40, 40, 40});
    const auto s = split(data, {0.9, 7, false});
    CHECK(s.test.size() == 36);
    CHECK(s.train.size() == 324);
    const auto tc = class_counts(s.test);
    for (auto n : tc) CHECK(n == 4);
    std::set<std::size_t> all(s.train_index.begin(), s.train_index.end());
    for (auto i : s.test_index) CHECK(all.insert(i).second);
    CHECK(all.size() == data.size());
    CHECK(std::is_sorted(s.test_index.begin(), s.test_index.end()));

    const auto again = split(data, {0.9, 7, false});
    CHECK(again.test_index == s.test_index);
    CHECK_FALSE(split(data, {0.9, 8, false}).test_index == s.test_index);

    CHECK_THROWS_AS(split(data, {1.0, 7, false}), Error);
    CHECK_THROWS_AS(split(data, {0.0, 7, false}), Error);
  }

  TEST_CASE("balanced split") {
    const auto data = counted({100, 50, 20, 30, 30, 30, 30, 30, 30});
    const auto s = split(data, {0.8, 3, true});
    const auto tc = class_counts(s.test);
    for (auto n : tc) CHECK(n == 4);
    CHECK(s.train.size() + s.test.size() == data.size());

    const auto absent = counted({20, 20, 0, 20, 20, 20, 20, 20, 20});
    const auto t = split(absent, {0.5, 3, true});
    CHECK(class_counts(t.test)[2] == 0);
    CHECK(class_counts(t.test)[0] == 10);

    try {
      split(counted({20, 9, 20, 20, 20, 20, 20, 20, 20}), {0.8, 3, true});
      FAIL("expected split error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::split);
      CHECK(std::string(e.what()).find("2 (9 rows)") != std::string::npos);
    }
    CHECK_NOTHROW(split(counted({20, 9, 20, 20, 20, 20, 20, 20, 20}), {0.8, 3, false}));
  }

  TEST_CASE("balance") {
    const auto data = counted({10, 4, 0, 6, 6, 6, 6, 6, 6});
    const auto b = balance(data, 1);
    const auto counts = class_counts(b);
    CHECK(counts[0] == 4);
    CHECK(counts[2] == 0);
    CHECK(counts[3] == 4);
    for (std::size_t i = 1; i < b.size(); ++i) CHECK(b[i - 1].features.displacement < b[i].features.displacement);
  }

  TEST_CASE("synthesis") {
    SynthSpec spec;
    spec.per_class = 400;
    const auto data = synthesize(spec);
    REQUIRE(data.size() == 3600);
    CHECK(synthesize(spec) == data);
    const auto& rows = reference_feature_rows();
    for (int c = 0; c < kClassCount; ++c) {
      double ear = 0.0;
      double disp = 0.0;
      for (int i = 0; i < 400; ++i) {
        const auto& inst = data[static_cast<std::size_t>(c * 400 + i)];
        CHECK(label(inst.label) == c + 1);
        CHECK(inst.features.min_r <= inst.features.aspect_ratio);
        CHECK(inst.features.max_r >= inst.features.aspect_ratio);
        CHECK(inst.features.min_d <= inst.features.displacement);
        CHECK(inst.features.max_d >= inst.features.displacement);
        ear += inst.features.aspect_ratio / 400;
        disp += inst.features.displacement / 400;
      }
      CHECK(ear == doctest::Approx(rows[static_cast<std::size_t>(c)].aspect_ratio).epsilon(0.02));
      CHECK(std::abs(disp - rows[static_cast<std::size_t>(c)].displacement) < 0.3);
    }

    spec.sigma_ear = 0.0;
    spec.sigma_disp = 0.0;
    spec.per_class = 1;
    const auto exact = synthesize(spec);
    CHECK(exact[4].features.displacement == rows[4].displacement);
    CHECK(exact[4].features.max_d == rows[4].max_d);
    spec.per_class = -1;
    CHECK_THROWS_AS(synthesize(spec), Error);
  }
}
