#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "ocugaze/bounded_queue.hpp"
#include "ocugaze/frame_source.hpp"
#include "ocugaze/pipeline.hpp"
#include "ocugaze/session.hpp"
#include "ocugaze/wire.hpp"

namespace ocugaze::service {

struct ServiceOptions {
  std::string host = "127.0.0.1";
  unsigned short port = 8080;  // 0 picks a free port
  std::filesystem::path static_dir;  // empty: only /ws and a stub index page
  std::size_t outbound_capacity = 256;  // per client, oldest dropped first
  double stats_interval_s = 1.0;
  bool pace_frames = true;  // hold frames to the source's nominal rate
  /// When set, calibration recordings are appended here on session end.
  std::filesystem::path record_to;
  std::string subject;
};

/// HTTP static files plus the /ws endpoint. Threads: one for socket I/O,
/// one capturing frames, one running the pipeline and the session
/// controller. They talk through bounded queues only.
class Service {
 public:
  Service(ServiceOptions options, Pipeline pipeline, std::unique_ptr<FrameSource> source,
          SessionConfig session = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and starts the workers; returns the bound port.
  unsigned short start();
  void stop();
  /// Blocks until stop() is called from another thread.
  void wait();

  /// Called from the session worker whenever the on-screen target changes;
  /// the synthetic frame source uses it to look where it is told.
  void on_target(std::function<void(std::optional<GazeClass>)> observer);

  /// Outbound messages broadcast so far (after queueing).
  std::uint64_t messages_sent() const noexcept { return sent_.load(); }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::atomic<std::uint64_t> sent_{0};
};

/// Maps a request target onto a file below `root`; nullopt for paths that
/// escape the root or carry a query the server does not understand.
std::optional<std::filesystem::path> resolve_static(const std::filesystem::path& root, std::string_view target);
std::string_view mime_type(const std::filesystem::path& path);

}  // namespace ocugaze::service
