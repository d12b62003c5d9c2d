#include "commands.hpp"

#include <pthread.h>
#include <signal.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "../camera.hpp"
#include "../service/service.hpp"
#include "ocugaze/config.hpp"
#include "ocugaze/dataset.hpp"
#include "ocugaze/error.hpp"
#include "ocugaze/frame_source.hpp"
#include "ocugaze/metrics.hpp"
#include "ocugaze/nn.hpp"
#include "ocugaze/pipeline.hpp"
#include "ocugaze/session.hpp"
#include "ocugaze/synthetic_face.hpp"
#include "ocugaze/wire.hpp"

namespace ocugaze::cli {
namespace {

using Clock = std::chrono::steady_clock;

struct Common {
  std::string config;
  std::string cascade;
};

struct SynthArgs {
  std::string out;
  int per_class = 500;
  std::string sigma = "default";
  std::optional<double> sigma_ear;
  std::optional<double> sigma_disp;
  std::uint64_t seed = 7;
};

struct TrainArgs {
  std::string data;
  std::string model;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  double train_fraction = 0.9;
  std::uint64_t split_seed = 7;
  std::string loss_trace;
};

struct EvalArgs {
  std::string data;
  std::string model;
  bool balanced = false;
  bool all = false;
  double train_fraction = 0.9;
  std::uint64_t split_seed = 7;
  std::string report;
  int digits = 2;
};

struct SourceArgs {
  std::string frames;
  std::optional<int> camera;
  bool synthetic = false;
  double frame_rate = 30.0;
  std::uint64_t seed = 7;
};

struct PredictArgs {
  std::string model;
  SourceArgs source;
  std::optional<int> window;
  bool json = false;
};

struct RecordArgs {
  std::string out;
  std::optional<double> target_seconds;
  std::optional<double> discard_seconds;
  std::string subject;
  SourceArgs source;
};

struct ServeArgs {
  std::string model;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;
  std::string record;
  std::string subject;
  double duration = 0.0;
  SourceArgs source;
};

AppConfig load_app_config(const Common& common) {
  AppConfig c = common.config.empty() ? AppConfig{} : load_config(common.config);
  if (!common.cascade.empty()) c.cascade_path = common.cascade;
  if (c.cascade_path.empty()) c.cascade_path = default_cascade_path();
  return c;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::io, "write failed: " + path.string());
}

// Held-out rows for train and eval come from the same split rule: balanced
// when every class has enough rows, stratified otherwise.
Split holdout_split(const std::vector<LabeledInstance>& rows, double train_fraction, std::uint64_t seed, bool balanced) {
  SplitSpec spec{train_fraction, seed, balanced};
  return split(rows, spec);
}

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  double scale = 1.0;
  if (a.sigma != "default") {
    std::size_t used = 0;
    try {
      scale = std::stod(a.sigma, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != a.sigma.size() || !(scale >= 0.0)) {
      throw Error(ErrorKind::parameter, "--sigma must be 'default' or a non-negative scale factor");
    }
  }
  SynthSpec spec;
  spec.per_class = a.per_class;
  spec.seed = a.seed;
  spec.sigma_ear = a.sigma_ear.value_or(spec.sigma_ear * scale);
  spec.sigma_disp = a.sigma_disp.value_or(spec.sigma_disp * scale);
  const auto rows = synthesize(spec);
  write_dataset(a.out, rows);
  out << "wrote " << rows.size() << " rows to " << a.out << " (sigma_ear " << spec.sigma_ear << ", sigma_disp "
      << spec.sigma_disp << ", seed " << spec.seed << ")\n";
  return kExitOk;
}

int cmd_train(const Common& common, const TrainArgs& a, std::ostream& out) {
  AppConfig cfg = load_app_config(common);
  if (a.seed) cfg.train.seed = *a.seed;
  if (a.epochs) cfg.train.epochs = *a.epochs;
  const auto rows = read_dataset(a.data);
  if (rows.empty()) throw Error(ErrorKind::parse, "dataset " + a.data + " has no rows");

  std::vector<LabeledInstance> train_rows;
  std::size_t held_out = 0;
  if (a.train_fraction >= 1.0) {
    train_rows = rows;
  } else {
    Split s;
    try {
      s = holdout_split(rows, a.train_fraction, a.split_seed, true);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::split) throw;
      s = holdout_split(rows, a.train_fraction, a.split_seed, false);
    }
    train_rows = std::move(s.train);
    held_out = s.test.size();
  }

  std::vector<OcularFeatureVector> x;
  std::vector<GazeClass> y;
  for (const auto& r : train_rows) {
    x.push_back(r.features);
    y.push_back(r.label);
  }
  const auto t0 = Clock::now();
  const auto result = train(x, y, cfg.train);
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();

  save_model(a.model, result.model);
  const std::filesystem::path trace = a.loss_trace.empty() ? a.model + ".loss.csv" : a.loss_trace;
  std::ostringstream csv;
  csv << "epoch,loss\n" << std::setprecision(9);
  for (std::size_t e = 0; e < result.loss_trace.size(); ++e) csv << e + 1 << ',' << result.loss_trace[e] << '\n';
  write_text(trace, csv.str());

  out << "trained on " << train_rows.size() << " rows (" << held_out << " held out), " << cfg.train.epochs
      << " epochs, seed " << cfg.train.seed << ", final loss " << std::setprecision(6) << result.loss_trace.back()
      << ", " << std::setprecision(3) << secs << " s\n";
  out << "model: " << a.model << "\nloss trace: " << trace.string() << "\n";
  return kExitOk;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto model = load_model(a.model);
  const auto rows = read_dataset(a.data);
  if (rows.empty()) throw Error(ErrorKind::parse, "dataset " + a.data + " has no rows");
  const auto test = a.all ? rows : holdout_split(rows, a.train_fraction, a.split_seed, a.balanced).test;
  if (test.empty()) throw Error(ErrorKind::split, "evaluation split is empty");

  std::vector<int> truth;
  std::vector<int> pred;
  for (const auto& r : test) {
    truth.push_back(label(r.label));
    pred.push_back(label(predict(model, r.features).label));
  }
  const auto report = classification_report(truth, pred);
  out << report.to_text(a.digits);
  const std::filesystem::path path = a.report.empty() ? a.model + ".confusion.json" : a.report;
  write_text(path, report.to_json() + "\n");
  out << "\nreport: " << path.string() << "\n";
  return kExitOk;
}

// Synthetic viewer whose gaze follows `target` (0 = centre), with small
// seeded head jitter and sensor noise per frame.
std::unique_ptr<FrameSource> synthetic_viewer(std::shared_ptr<std::atomic<int>> target, std::uint64_t seed, double rate) {
  auto rng = std::make_shared<std::mt19937_64>(seed);
  return std::make_unique<SyntheticSource>(
      [target, rng](std::size_t i) {
        std::uniform_real_distribution<double> jitter(-1.0, 1.0);
        FaceScene base;
        base.cx += 3.0 * jitter(*rng);
        base.cy += 3.0 * jitter(*rng);
        base.size *= 1.0 + 0.02 * jitter(*rng);
        base.noise_sigma = 2.0;
        base.noise_seed = (*rng)() ^ i;
        const int t = target->load();
        return scene_for_gaze(t >= 1 && t <= kClassCount ? gaze_class(t) : GazeClass::center, base);
      },
      std::numeric_limits<std::size_t>::max(), rate);
}

std::unique_ptr<FrameSource> open_source(const SourceArgs& s, std::shared_ptr<std::atomic<int>> target) {
  const int chosen = static_cast<int>(!s.frames.empty()) + static_cast<int>(s.camera.has_value()) + static_cast<int>(s.synthetic);
  if (chosen > 1) throw Error(ErrorKind::parameter, "choose one of --frames, --camera, --synthetic");
  if (!s.frames.empty()) return std::make_unique<PgmDirectorySource>(s.frames, s.frame_rate);
  if (s.synthetic) return synthetic_viewer(std::move(target), s.seed, s.frame_rate);
  return open_camera(s.camera.value_or(0));
}

int cmd_predict(const Common& common, const PredictArgs& a, std::ostream& out, std::ostream& err) {
  AppConfig cfg = load_app_config(common);
  if (a.window) cfg.pipeline.smoothing_window = *a.window;
  auto target = std::make_shared<std::atomic<int>>(0);
  auto source = open_source(a.source, target);
  Pipeline pipeline(load_cascade_file(cfg.cascade_path), load_model(a.model), cfg.pipeline);
  std::size_t i = 0;
  while (auto frame = source->next()) {
    const auto r = pipeline.process_frame(*frame);
    if (a.json) {
      const wire::Outbound msg = r.ok() ? wire::Outbound{wire::PredictionMsg{r.prediction.label, r.prediction.confidences, r.smoothed, 0}}
                                        : wire::Outbound{wire::Drop{*r.drop, 0}};
      out << wire::serialize(msg) << '\n';
    } else if (r.ok()) {
      out << i << '\t' << label(r.prediction.label) << '\t' << label(r.smoothed) << '\t' << direction_name(r.smoothed)
          << '\n';
    } else {
      out << i << "\tdrop\t" << to_string(*r.drop) << '\n';
    }
    ++i;
    if (a.source.synthetic && i >= 300) break;
  }
  const auto& st = pipeline.stats();
  err << "frames " << st.frames_seen << ", dropped " << st.frames_dropped() << ", mean " << std::setprecision(3)
      << st.mean_frame_ms() << " ms/frame\n";
  return kExitOk;
}

int cmd_record(const Common& common, const RecordArgs& a, std::ostream& out) {
  AppConfig cfg = load_app_config(common);
  if (a.target_seconds) cfg.session.dwell_s = *a.target_seconds;
  if (a.discard_seconds) cfg.session.discard_s = *a.discard_seconds;
  if (!(cfg.session.dwell_s > cfg.session.discard_s)) {
    throw Error(ErrorKind::parameter, "--target-seconds must exceed the discard interval");
  }
  auto target = std::make_shared<std::atomic<int>>(0);
  auto source = open_source(a.source, target);
  const bool realtime = !a.source.synthetic && a.source.frames.empty();
  const auto cascade = load_cascade_file(cfg.cascade_path);

  auto stamp = std::chrono::system_clock::now().time_since_epoch();
  cfg.session.session_prefix =
      "rec" + std::to_string(std::chrono::duration_cast<std::chrono::seconds>(stamp).count());
  SessionController session(cfg.session);
  FeatureAccumulator acc(cfg.pipeline.feature_window);

  const auto announce = [&](const std::vector<wire::Outbound>& msgs) {
    for (const auto& m : msgs) {
      if (const auto* t = std::get_if<wire::Target>(&m)) {
        target->store(label(t->cls));
        acc.reset();
        out << "target " << label(t->cls) << " (" << direction_name(t->cls) << ")\n";
      }
    }
  };
  announce(session.handle(wire::StartCalibration{cfg.session.dwell_s}, 0.0));

  const auto t0 = Clock::now();
  std::size_t i = 0;
  std::size_t drops = 0;
  while (session.state().mode != SessionMode::idle) {
    auto frame = source->next();
    if (!frame) {
      out << "warning: frame source ended before the last target\n";
      break;
    }
    const double t = realtime ? std::chrono::duration<double>(Clock::now() - t0).count()
                              : static_cast<double>(i) / source->frame_rate();
    ++i;
    const auto x = extract_features(*frame, cascade, cfg.pipeline, acc);
    FrameEvent e;
    e.t_s = t;
    e.drop = x.drop;
    e.features = x.features;
    if (x.drop) ++drops;
    announce(session.tick(e));
  }

  const auto rows = session.take_recorded();
  std::size_t first = 0;
  std::error_code ec;
  if (std::filesystem::exists(a.out, ec)) first = read_dataset(a.out).size();
  append_dataset(a.out, rows);
  SessionMetadata meta;
  meta.session_id = rows.empty() ? cfg.session.session_prefix + "-1" : rows.front().session_id;
  meta.subject = a.subject;
  meta.frame_rate = source->frame_rate();
  meta.first_row = first;
  meta.rows = rows.size();
  for (const auto& r : rows) meta.timestamps_ms.push_back(r.timestamp_ms);
  append_session_metadata(a.out, meta);

  out << "recorded " << rows.size() << " instances from " << i << " frames (" << drops << " dropped) into " << a.out
      << "\nper class:";
  for (auto n : session.captured_per_class()) out << ' ' << n;
  out << '\n';
  return kExitOk;
}

int cmd_serve(const Common& common, const ServeArgs& a, std::ostream& out) {
  AppConfig cfg = load_app_config(common);
  if (a.port < 0 || a.port > 65535) throw Error(ErrorKind::parameter, "--port must be in 0..65535");
  auto target = std::make_shared<std::atomic<int>>(0);
  auto source = open_source(a.source, target);
  Pipeline pipeline(load_cascade_file(cfg.cascade_path), load_model(a.model), cfg.pipeline);

  service::ServiceOptions opts;
  opts.host = a.host;
  opts.port = static_cast<unsigned short>(a.port);
  if (!a.static_dir.empty() && !std::filesystem::is_directory(a.static_dir)) {
    throw Error(ErrorKind::io, "static directory " + a.static_dir + " does not exist");
  }
  opts.static_dir = a.static_dir;
  opts.record_to = a.record;
  opts.subject = a.subject;

  // Signals go to sigwait below, not to the worker threads.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  service::Service svc(opts, std::move(pipeline), std::move(source), cfg.session);
  svc.on_target([target](std::optional<GazeClass> t) { target->store(t ? label(*t) : 0); });
  const auto port = svc.start();
  out << "listening on http://" << a.host << ":" << port << "/ (websocket /ws)" << std::endl;

  if (a.duration > 0.0) {
    std::this_thread::sleep_for(std::chrono::duration<double>(a.duration));
  } else {
    int sig = 0;
    sigwait(&signals, &sig);
  }
  svc.stop();
  pthread_sigmask(SIG_UNBLOCK, &signals, nullptr);
  out << "stopped" << std::endl;
  return kExitOk;
}

void add_source_options(CLI::App* cmd, SourceArgs& s) {
  auto* frames = cmd->add_option("--frames", s.frames, "Directory of numbered PGM frames");
  auto* camera = cmd->add_option("--camera", s.camera, "Camera device index");
  auto* synth = cmd->add_flag("--synthetic", s.synthetic, "Rendered synthetic viewer that follows the targets");
  frames->excludes(camera)->excludes(synth);
  camera->excludes(synth);
  cmd->add_option("--frame-rate", s.frame_rate, "Nominal frame rate for --frames and --synthetic")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--source-seed", s.seed, "Seed of the synthetic viewer");
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::diverged_training: return kExitDiverged;
    case ErrorKind::device_unavailable: return kExitDevice;
    case ErrorKind::parameter:
    case ErrorKind::split: return kExitUsage;
    default: return kExitInput;
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Low-resolution gaze direction estimation"};
  app.name("ocugaze");
  app.require_subcommand(1);
  app.set_version_flag("--version", "ocugaze 0.3.0");

  Common common;
  app.add_option("--config", common.config, "Key/value configuration file");
  app.add_option("--cascade", common.cascade, "Haar cascade XML (default: bundled frontal face)");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Write a synthetic feature dataset");
  c_synth->add_option("--out", synth.out, "Output CSV")->required();
  c_synth->add_option("--per-class", synth.per_class, "Instances per class")->check(CLI::NonNegativeNumber);
  c_synth->add_option("--sigma", synth.sigma, "'default' or a factor on the default noise levels");
  c_synth->add_option("--sigma-ear", synth.sigma_ear, "Absolute EAR noise (overrides --sigma)");
  c_synth->add_option("--sigma-disp", synth.sigma_disp, "Absolute displacement noise (overrides --sigma)");
  c_synth->add_option("--seed", synth.seed, "Generator seed");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train the classifier on a dataset");
  c_train->add_option("--data", tr.data, "Dataset CSV")->required();
  c_train->add_option("--model", tr.model, "Output model file")->required();
  c_train->add_option("--seed", tr.seed, "Initialization and shuffle seed");
  c_train->add_option("--epochs", tr.epochs, "Override the configured epoch count")->check(CLI::PositiveNumber);
  c_train->add_option("--train-fraction", tr.train_fraction, "Fraction kept for training; 1 trains on everything")
      ->check(CLI::Range(0.0, 1.0));
  c_train->add_option("--split-seed", tr.split_seed, "Seed of the train/test split");
  c_train->add_option("--loss-trace", tr.loss_trace, "Per-epoch loss CSV (default: <model>.loss.csv)");

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Score a model on the held-out split of a dataset");
  c_eval->add_option("--data", ev.data, "Dataset CSV")->required();
  c_eval->add_option("--model", ev.model, "Model file")->required();
  c_eval->add_flag("--balanced", ev.balanced, "Equal test rows per class");
  c_eval->add_flag("--all", ev.all, "Score every row instead of the held-out split");
  c_eval->add_option("--train-fraction", ev.train_fraction, "Must match the value used for training")
      ->check(CLI::Range(0.0, 1.0));
  c_eval->add_option("--split-seed", ev.split_seed, "Must match the value used for training");
  c_eval->add_option("--report", ev.report, "Report/confusion JSON (default: <model>.confusion.json)");
  c_eval->add_option("--digits", ev.digits, "Decimals in the text report")->check(CLI::Range(1, 9));

  PredictArgs pr;
  auto* c_predict = app.add_subcommand("predict", "Stream per-frame and smoothed classes");
  c_predict->add_option("--model", pr.model, "Model file")->required();
  c_predict->add_option("--window", pr.window, "Smoothing window M")->check(CLI::PositiveNumber);
  c_predict->add_flag("--json", pr.json, "Emit wire-format JSON lines");
  add_source_options(c_predict, pr.source);

  RecordArgs rec;
  auto* c_record = app.add_subcommand("record", "Run the 9-target calibration cycle and append labeled instances");
  c_record->add_option("--out", rec.out, "Dataset CSV to append to")->required();
  c_record->add_option("--target-seconds", rec.target_seconds, "Dwell per target")->check(CLI::PositiveNumber);
  c_record->add_option("--discard-seconds", rec.discard_seconds, "Ignored start of each dwell")
      ->check(CLI::NonNegativeNumber);
  c_record->add_option("--subject", rec.subject, "Subject tag for the session metadata");
  add_source_options(c_record, rec.source);

  ServeArgs sv;
  auto* c_serve = app.add_subcommand("serve", "HTTP + websocket service for the browser suite");
  c_serve->add_option("--model", sv.model, "Model file")->required();
  c_serve->add_option("--host", sv.host, "Listen address");
  c_serve->add_option("--port", sv.port, "Listen port (0 picks one)");
  c_serve->add_option("--static", sv.static_dir, "Directory of UI assets");
  c_serve->add_option("--record", sv.record, "Append calibration sessions to this dataset");
  c_serve->add_option("--subject", sv.subject, "Subject tag for recorded sessions");
  c_serve->add_option("--duration", sv.duration, "Stop after this many seconds (0: until SIGINT)")
      ->check(CLI::NonNegativeNumber);
  add_source_options(c_serve, sv.source);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (c_synth->parsed()) return cmd_synth(synth, out);
    if (c_train->parsed()) return cmd_train(common, tr, out);
    if (c_eval->parsed()) return cmd_eval(ev, out);
    if (c_predict->parsed()) return cmd_predict(common, pr, out, err);
    if (c_record->parsed()) return cmd_record(common, rec, out);
    if (c_serve->parsed()) return cmd_serve(common, sv, out);
  } catch (const Error& e) {
    err << "ocugaze: " << to_string(e.kind()) << " error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "ocugaze: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitUsage;
}

}  // namespace ocugaze::cli
