#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "ocugaze/dataset.hpp"
#include "ocugaze/eye_region.hpp"
#include "ocugaze/face_detect.hpp"
#include "ocugaze/imgproc.hpp"
#include "ocugaze/nn.hpp"
#include "ocugaze/ocular_features.hpp"
#include "ocugaze/pipeline.hpp"
#include "ocugaze/synthetic_face.hpp"

using namespace ocugaze;

namespace {

const Cascade& cascade() {
  static const Cascade c = load_cascade_file(std::filesystem::path(OCUGAZE_BENCH_DATA_DIR) /
                                             "haarcascade_frontalface_default.xml");
  return c;
}

struct Table {
  std::vector<OcularFeatureVector> x;
  std::vector<GazeClass> y;
};

const Table& table() {
  static const Table t = [] {
    Table t;
    for (const auto& d : synthesize(SynthSpec{})) {
      t.x.push_back(d.features);
      t.y.push_back(d.label);
    }
    return t;
  }();
  return t;
}

const Model& model() {
  static const Model m = [] {
    TrainConfig cfg;
    cfg.epochs = 10;
    return train(table().x, table().y, cfg).model;
  }();
  return m;
}

GrayFrame face_frame(std::uint64_t seed) {
  auto s = scene_for_gaze(GazeClass::north_east);
  s.noise_sigma = 2.0;
  s.noise_seed = seed;
  return render_face(s).frame;
}

}  // namespace

static void BM_Integral(benchmark::State& state) {
  const auto f = face_frame(1);
  for (auto _ : state) benchmark::DoNotOptimize(integral(f));
}
BENCHMARK(BM_Integral)->Unit(benchmark::kMicrosecond);

static void BM_DetectFace(benchmark::State& state) {
  const auto f = face_frame(2);
  const int min_size = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(detect_face(f, cascade(), min_size));
}
BENCHMARK(BM_DetectFace)->Arg(48)->Arg(96)->Unit(benchmark::kMillisecond);

static void BM_ObserveEye(benchmark::State& state) {
  const auto f = face_frame(3);
  const auto box = detect_face(f, cascade(), 96);
  if (!box) {
    state.SkipWithError("no face in the synthetic frame");
    return;
  }
  const auto roi = normalize_roi(extract_eye_roi(f, *box, EyeSide::left));
  for (auto _ : state) benchmark::DoNotOptimize(observe_eye(roi));
}
BENCHMARK(BM_ObserveEye)->Unit(benchmark::kMicrosecond);

static void BM_ProcessFrame(benchmark::State& state) {
  std::vector<GrayFrame> frames;
  for (std::uint64_t i = 0; i < 16; ++i) frames.push_back(face_frame(i));
  Pipeline pipeline(cascade(), model());
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(pipeline.process_frame(frames[i++ % frames.size()]));
}
BENCHMARK(BM_ProcessFrame)->Unit(benchmark::kMillisecond);

static void BM_Forward(benchmark::State& state) {
  const auto& m = model();
  const auto x = m.normalization.apply(table().x.front());
  for (auto _ : state) benchmark::DoNotOptimize(forward(m.params, x));
}
BENCHMARK(BM_Forward);

static void BM_TrainEpoch(benchmark::State& state) {
  TrainConfig cfg;
  cfg.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train(table().x, table().y, cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(table().x.size()));
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
