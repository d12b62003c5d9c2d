#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include "ocugaze/config.hpp"
#include "ocugaze/error.hpp"
#include "test_support.hpp"

using namespace ocugaze;

namespace {

ErrorKind config_error(std::string_view text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::io;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("defaults") {
    const auto c = parse_config("");
    CHECK(c.cascade_path.empty());
    CHECK(c.pipeline.min_face_size == 96);
    CHECK(c.pipeline.feature_window == 25);
    CHECK(c.pipeline.smoothing_window == 15);
    CHECK(c.pipeline.eye == EyeSide::left);
    CHECK(c.train.hidden_sizes == std::vector<int>{32, 24, 16});
    CHECK(c.session.dwell_s == 3.0);
    CHECK(c.session.discard_s == 0.5);
  }

  TEST_CASE("all keys") {
    const auto c = parse_config(R"(
# gaze estimator settings
[detector]
cascade = "cascades/face.xml"
min_face_size = 64   # smaller faces
scale_factor = 1.1
merge_iou = 0.5
min_group = 2

[roi]
eye = right
top = 0.2
bottom = 0.5
left_eye_begin = 0.5
left_eye_end = 0.9
right_eye_begin = 0.1
right_eye_end = 0.5
target_height = 16
stretch_below_mean = 60

[features]
window = 10

[smoothing]
window = 7

[net]
hidden_sizes = [16, 8]

[train]
learning_rate = 0.05
momentum = 0.5
batch_size = 8
epochs = 12
seed = 99

[session]
dwell_s = 2.0
discard_s = 0.25
)");
    CHECK(c.cascade_path == "cascades/face.xml");
    CHECK(c.pipeline.min_face_size == 64);
    CHECK(c.pipeline.detector.scale_factor == 1.1);
    CHECK(c.pipeline.detector.merge_iou == 0.5);
    CHECK(c.pipeline.detector.min_group == 2);
    CHECK(c.pipeline.eye == EyeSide::right);
    CHECK(c.pipeline.roi.top == 0.2);
    CHECK(c.pipeline.roi.right_eye_end == 0.5);
    CHECK(c.pipeline.normalize.target_height == 16);
    CHECK(c.pipeline.normalize.stretch_below_mean == 60);
    CHECK(c.pipeline.feature_window == 10);
    CHECK(c.pipeline.smoothing_window == 7);
    CHECK(c.train.hidden_sizes == std::vector<int>{16, 8});
    CHECK(c.train.learning_rate == 0.05);
    CHECK(c.train.momentum == 0.5);
    CHECK(c.train.batch_size == 8);
    CHECK(c.train.epochs == 12);
    CHECK(c.train.seed == 99);
    CHECK(c.session.dwell_s == 2.0);
    CHECK(c.session.discard_s == 0.25);
  }

  TEST_CASE("invalid settings") {
    CHECK(config_error("[detector]\nbogus = 1\n") == ErrorKind::configuration);
    CHECK(config_error("[detector]\nmin_face_size = big\n") == ErrorKind::configuration);
    CHECK(config_error("[detector]\nmin_face_size = 8\n") == ErrorKind::configuration);
    CHECK(config_error("[detector]\nscale_factor = 1.0\n") == ErrorKind::configuration);
    CHECK(config_error("[roi]\ntop = 0.5\nbottom = 0.4\n") == ErrorKind::configuration);
    CHECK(config_error("[roi]\neye = both\n") == ErrorKind::configuration);
    CHECK(config_error("[net]\nhidden_sizes = [16, 0]\n") == ErrorKind::configuration);
    CHECK(config_error("[net]\nhidden_sizes = [16, 8\n") == ErrorKind::configuration);
    CHECK(config_error("[train]\nmomentum = 1.0\n") == ErrorKind::configuration);
    CHECK(config_error("[train]\nseed = -1\n") == ErrorKind::configuration);
    CHECK(config_error("[session]\ndwell_s = 0.4\n") == ErrorKind::configuration);
    CHECK(config_error("[smoothing]\nwindow = 0\n") == ErrorKind::configuration);
    CHECK(config_error("[detector\nmin_face_size = 64\n") == ErrorKind::configuration);
  }

  TEST_CASE("files and cascade resolution") {
    const auto dir = testing::scratch_dir("config");
    std::ofstream(dir / "app.ini") << "[detector]\ncascade = face.xml\n";
    const auto c = load_config(dir / "app.ini");
    CHECK(c.cascade_path == dir / "face.xml");
    std::ofstream(dir / "abs.ini") << "[detector]\ncascade = /opt/face.xml\n";
    CHECK(load_config(dir / "abs.ini").cascade_path == "/opt/face.xml");
    try {
      load_config(dir / "missing.ini");
      FAIL("expected io error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::io);
    }

    const auto builtin = default_cascade_path();
    CHECK(builtin.filename() == "haarcascade_frontalface_default.xml");
    CHECK(std::filesystem::exists(builtin));
    ::setenv("OCUGAZE_CASCADE", "/tmp/elsewhere.xml", 1);
    CHECK(default_cascade_path() == "/tmp/elsewhere.xml");
    ::unsetenv("OCUGAZE_CASCADE");
  }
}
