#include <doctest.h>

#include <random>
#include <thread>

#include "ocugaze/bounded_queue.hpp"
#include "ocugaze/dataset.hpp"
#include "ocugaze/error.hpp"
#include "ocugaze/pipeline.hpp"
#include "ocugaze/synthetic_face.hpp"
#include "test_support.hpp"

using namespace ocugaze;
using ocugaze::testing::frontal_cascade;

namespace {

const Model& small_model() {
  static const Model m = [] {
    SynthSpec spec;
    spec.per_class = 40;
    const auto data = synthesize(spec);
    std::vector<OcularFeatureVector> x;
    std::vector<GazeClass> y;
    for (const auto& d : data) {
      x.push_back(d.features);
      y.push_back(d.label);
    }
    TrainConfig cfg;
    cfg.epochs = 20;
    return train(x, y, cfg).model;
  }();
  return m;
}

GazeClass noisy_label(GazeClass truth, double accuracy, std::mt19937_64& rng) {
  std::bernoulli_distribution right(accuracy);
  if (right(rng)) return truth;
  std::uniform_int_distribution<int> other(1, kClassCount - 1);
  const int o = other(rng);
  return gaze_class(o >= label(truth) ? o + 1 : o);
}

double smoothed_accuracy(int window, double frame_accuracy, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  PredictionWindow w(window);
  int hits = 0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    w.push(noisy_label(GazeClass::north, frame_accuracy, rng), 0.5);
    hits += smooth(w) == GazeClass::north;
  }
  return static_cast<double>(hits) / n;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("majority smoothing") {
    PredictionWindow w(15);
    CHECK_THROWS_AS(smooth(w), Error);
    w.push(GazeClass::north_west, 0.9);
    w.push(GazeClass::north_west, 0.9);
    w.push(GazeClass::north, 0.9);
    CHECK(smooth(w) == GazeClass::north_west);

    PredictionWindow tie(4);
    tie.push(GazeClass::east, 0.4);
    tie.push(GazeClass::south, 0.8);
    tie.push(GazeClass::east, 0.5);
    tie.push(GazeClass::south, 0.6);
    CHECK(smooth(tie) == GazeClass::south);

    PredictionWindow exact(2);
    exact.push(GazeClass::west, 0.5);
    exact.push(GazeClass::north, 0.5);
    CHECK(smooth(exact) == GazeClass::north);

    PredictionWindow one(1);
    one.push(GazeClass::south, 0.2);
    one.push(GazeClass::center, 0.3);
    CHECK(one.size() == 1);
    CHECK(smooth(one) == GazeClass::center);
    CHECK_THROWS_AS(PredictionWindow(0), Error);
  }

  TEST_CASE("smoothing improves noisy streams") {
    const double a1 = smoothed_accuracy(1, 0.7, 4);
    const double a5 = smoothed_accuracy(5, 0.7, 4);
    const double a15 = smoothed_accuracy(15, 0.7, 4);
    CHECK(a1 == doctest::Approx(0.7).epsilon(0.05));
    CHECK(a5 > a1);
    CHECK(a15 >= a5);
    CHECK(a15 > 0.95);
  }

  TEST_CASE("drop reason names") {
    CHECK(to_string(DropReason::no_face) == "no-face");
    CHECK(to_string(DropReason::iris_fail) == "iris-fail");
    CHECK(parse_drop_reason("landmark-fail") == DropReason::landmark_fail);
    CHECK_THROWS_AS(parse_drop_reason("nope"), Error);
  }

  TEST_CASE("blank frames drop as no-face") {
    Pipeline p(frontal_cascade(), small_model());
    const auto out = p.process_frame(GrayFrame(640, 480, 0));
    CHECK_FALSE(out.ok());
    CHECK(*out.drop == DropReason::no_face);
    CHECK(p.stats().frames_seen == 1);
    CHECK(p.stats().dropped[0] == 1);
    CHECK(p.stats().frames_dropped() == 1);
    CHECK_THROWS_AS(p.process_frame(GrayFrame(40, 40, 0)), Error);
  }

  TEST_CASE("synthetic faces produce predictions") {
    Pipeline p(frontal_cascade(), small_model());
    for (int i = 0; i < 10; ++i) {
      auto scene = scene_for_gaze(GazeClass::west);
      scene.noise_sigma = 2.0;
      scene.noise_seed = static_cast<std::uint64_t>(i);
      const auto out = p.process_frame(render_face(scene).frame);
      REQUIRE(out.ok());
      REQUIRE(out.face.has_value());
      double total = 0.0;
      for (double c : out.prediction.confidences) total += c;
      CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
      double stages = 0.0;
      for (double s : out.stage_ms) stages += s;
      CHECK(stages <= out.total_ms + 1e-6);
      CHECK(out.features.min_r <= out.features.aspect_ratio);
    }
    CHECK(p.stats().frames_seen == 10);
    CHECK(p.stats().frames_dropped() == 0);
    CHECK(p.stats().mean_frame_ms() > 0.0);
    CHECK(p.stats().to_json().find("\"no-face\":0") != std::string::npos);
  }

  TEST_CASE("processing is deterministic") {
    std::vector<GrayFrame> frames;
    for (int i = 0; i < 6; ++i) {
      auto scene = scene_for_gaze(gaze_class(1 + i % kClassCount));
      scene.noise_sigma = 3.0;
      scene.noise_seed = static_cast<std::uint64_t>(i);
      frames.push_back(render_face(scene).frame);
    }
    frames.insert(frames.begin() + 3, GrayFrame(640, 480, 0));
    Pipeline a(frontal_cascade(), small_model());
    Pipeline b(frontal_cascade(), small_model());
    for (const auto& f : frames) {
      const auto x = a.process_frame(f);
      const auto y = b.process_frame(f);
      CHECK(x.drop == y.drop);
      CHECK(x.features == y.features);
      CHECK(x.prediction.confidences == y.prediction.confidences);
      CHECK(x.smoothed == y.smoothed);
    }
    a.reset();
    const auto again = a.process_frame(frames[0]);
    Pipeline fresh(frontal_cascade(), small_model());
    CHECK(fresh.process_frame(frames[0]).features == again.features);
  }

  TEST_CASE("drops leave the accumulator alone") {
    PipelineConfig cfg;
    FeatureAccumulator acc(cfg.feature_window);
    const auto first = extract_features(render_face(scene_for_gaze(GazeClass::north)).frame, frontal_cascade(), cfg, acc);
    REQUIRE_FALSE(first.drop);
    CHECK(acc.size() == 1);
    const auto blank = extract_features(GrayFrame(640, 480, 90), frontal_cascade(), cfg, acc);
    CHECK(blank.drop == DropReason::no_face);
    CHECK(acc.size() == 1);
  }

  TEST_CASE("model validation on construction") {
    Model broken = small_model();
    broken.params.layers.pop_back();
    CHECK_THROWS_AS(Pipeline(frontal_cascade(), broken), Error);
  }

  TEST_CASE("bounded queue drops the oldest") {
    BoundedQueue<int> q(2);
    CHECK_FALSE(q.push(1));
    CHECK_FALSE(q.push(2));
    CHECK(q.push(3));
    CHECK(q.size() == 2);
    CHECK(q.evicted() == 1);
    CHECK(q.try_pop() == 2);
    CHECK(q.pop() == 3);
    CHECK_FALSE(q.try_pop().has_value());
    CHECK_FALSE(q.pop_for(std::chrono::milliseconds(5)).has_value());

    std::thread consumer([&] {
      int seen = 0;
      while (auto v = q.pop()) seen += *v > 0;
      CHECK(seen >= 1);
    });
    for (int i = 1; i <= 1000; ++i) q.push(i);
    q.close();
    consumer.join();
    CHECK(q.closed());
    CHECK_FALSE(q.push(5));
    CHECK(q.size() == 0);
  }
}
