#include <doctest.h>

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "commands.hpp"
#include "ocugaze/dataset.hpp"
#include "ocugaze/nn.hpp"
#include "ocugaze/pgm.hpp"
#include "ocugaze/synthetic_face.hpp"
#include "ocugaze/wire.hpp"
#include "test_support.hpp"

using namespace ocugaze;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result run(std::initializer_list<std::string> args) {
  std::vector<std::string> owned{"ocugaze"};
  owned.insert(owned.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : owned) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  Result r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors") {
    CHECK(run({}).code == cli::kExitUsage);
    CHECK(run({"--help"}).code == cli::kExitOk);
    CHECK(run({"dance"}).code == cli::kExitUsage);
    CHECK(run({"train"}).code == cli::kExitUsage);
    CHECK(run({"synth", "--out", "x.csv", "--per-class", "-3"}).code == cli::kExitUsage);
    CHECK(run({"eval", "--data", "a", "--model", "b", "--digits", "12"}).code == cli::kExitUsage);
  }

  TEST_CASE("synth, train, eval") {
    const auto dir = testing::scratch_dir("cli_pipeline");
    const auto data = (dir / "synth.csv").string();
    const auto model = (dir / "model.json").string();

    auto r = run({"synth", "--out", data, "--per-class", "150", "--seed", "3"});
    REQUIRE(r.code == 0);
    CHECK(read_dataset(data).size() == 1350);

    r = run({"train", "--data", data, "--model", model, "--epochs", "40"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("held out") != std::string::npos);
    CHECK(std::filesystem::exists(model + ".loss.csv"));
    const auto first = slurp(model);
    REQUIRE(run({"train", "--data", data, "--model", model, "--epochs", "40"}).code == 0);
    CHECK(slurp(model) == first);

    r = run({"eval", "--data", data, "--model", model, "--balanced"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("macro avg") != std::string::npos);
    const auto report = ClassificationReport::from_json(slurp(model + ".confusion.json"));
    CHECK(report.confusion.total() == 9 * 15);
    CHECK(report.accuracy > 0.8);

    r = run({"eval", "--data", data, "--model", model, "--all", "--report", (dir / "all.json").string()});
    REQUIRE(r.code == 0);
    CHECK(ClassificationReport::from_json(slurp(dir / "all.json")).confusion.total() == 1350);
  }

  TEST_CASE("file and parse errors exit 2") {
    const auto dir = testing::scratch_dir("cli_errors");
    CHECK(run({"train", "--data", (dir / "missing.csv").string(), "--model", (dir / "m.json").string()}).code ==
          cli::kExitInput);
    std::ofstream(dir / "bad.csv") << "not,a,dataset\n";
    const auto r = run({"train", "--data", (dir / "bad.csv").string(), "--model", (dir / "m.json").string()});
    CHECK(r.code == cli::kExitInput);
    CHECK(r.err.find("row 1") != std::string::npos);
    std::ofstream(dir / "m.json") << "{}";
    std::ofstream(dir / "ok.csv") << kDatasetHeader << "\n0.3,0.2,0.4,1,-2,3,1\n";
    CHECK(run({"eval", "--data", (dir / "ok.csv").string(), "--model", (dir / "m.json").string(), "--all"}).code ==
          cli::kExitInput);
    const auto cfg = run({"--config", (dir / "none.ini").string(), "train", "--data", (dir / "ok.csv").string(), "--model",
                          (dir / "n.json").string()});
    CHECK(cfg.code == cli::kExitInput);
    CHECK(cfg.err.find("config") != std::string::npos);
    CHECK(run({"--cascade", (dir / "none.xml").string(), "predict", "--model", (dir / "m.json").string(), "--frames",
               dir.string()})
              .code == cli::kExitInput);
  }

  TEST_CASE("diverged training exits 3") {
    const auto dir = testing::scratch_dir("cli_diverge");
    const auto data = (dir / "d.csv").string();
    REQUIRE(run({"synth", "--out", data, "--per-class", "20"}).code == 0);
    std::ofstream(dir / "hot.ini") << "[train]\nlearning_rate = 1e200\nepochs = 3\n";
    const auto r = run({"--config", (dir / "hot.ini").string(), "train", "--data", data, "--model",
                        (dir / "m.json").string(), "--train-fraction", "1"});
    CHECK(r.code == cli::kExitDiverged);
    CHECK_FALSE(std::filesystem::exists(dir / "m.json"));
  }

  TEST_CASE("missing camera exits 4") {
    const auto dir = testing::scratch_dir("cli_camera");
    const auto data = (dir / "d.csv").string();
    const auto model = (dir / "m.json").string();
    REQUIRE(run({"synth", "--out", data, "--per-class", "20"}).code == 0);
    REQUIRE(run({"train", "--data", data, "--model", model, "--epochs", "2"}).code == 0);
    CHECK(run({"predict", "--model", model, "--camera", "57"}).code == cli::kExitDevice);
  }

  TEST_CASE("predict over PGM frames and record from the synthetic viewer") {
    const auto dir = testing::scratch_dir("cli_stream");
    const auto data = (dir / "d.csv").string();
    const auto model = (dir / "m.json").string();
    REQUIRE(run({"synth", "--out", data, "--per-class", "60"}).code == 0);
    REQUIRE(run({"train", "--data", data, "--model", model, "--epochs", "20"}).code == 0);

    std::filesystem::create_directories(dir / "frames");
    for (int i = 0; i < 12; ++i) {
      auto scene = scene_for_gaze(GazeClass::east);
      scene.noise_sigma = 2.0;
      scene.noise_seed = static_cast<std::uint64_t>(i);
      write_pgm(dir / "frames" / ("f" + std::to_string(i) + ".pgm"), render_face(scene).frame);
    }
    write_pgm(dir / "frames" / "f12.pgm", GrayFrame(640, 480, 0));
    auto r = run({"predict", "--model", model, "--frames", (dir / "frames").string(), "--json"});
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    std::string line;
    int predictions = 0;
    int drops = 0;
    while (std::getline(lines, line)) {
      const auto m = wire::parse_outbound(line);
      predictions += std::holds_alternative<wire::PredictionMsg>(m);
      drops += std::holds_alternative<wire::Drop>(m);
    }
    CHECK(predictions == 12);
    CHECK(drops == 1);
    CHECK(r.err.find("frames 13") != std::string::npos);

    const auto rec = (dir / "rec.csv").string();
    r = run({"record", "--out", rec, "--synthetic", "--target-seconds", "0.6", "--discard-seconds", "0.1",
             "--frame-rate", "30", "--subject", "sim"});
    REQUIRE(r.code == 0);
    const auto rows = read_dataset(rec);
    const auto counts = class_counts(rows);
    for (auto n : counts) CHECK(n >= 10);
    const auto meta = read_session_metadata(rec);
    REQUIRE(meta.size() == 1);
    CHECK(meta[0].rows == rows.size());
    CHECK(meta[0].subject == "sim");
    CHECK(meta[0].frame_rate == 30.0);
  }
}
