#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "ocugaze/image.hpp"
#include "ocugaze/synthetic_face.hpp"

namespace ocugaze {

/// Sequential frame producer. next() returns nullopt at end of stream.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual std::optional<GrayFrame> next() = 0;
  /// Nominal rate used to timestamp frames, frames per second.
  virtual double frame_rate() const = 0;
};

/// PGM files in a directory, ordered by the last run of digits in each
/// file name (frame2.pgm before frame10.pgm). Throws Error(io) when the
/// directory is missing or holds no .pgm file.
class PgmDirectorySource final : public FrameSource {
 public:
  explicit PgmDirectorySource(const std::filesystem::path& dir, double frame_rate = 30.0);
  std::optional<GrayFrame> next() override;
  double frame_rate() const override { return rate_; }
  const std::vector<std::filesystem::path>& files() const noexcept { return files_; }

 private:
  std::vector<std::filesystem::path> files_;
  std::size_t cursor_ = 0;
  double rate_;
};

/// Renders `count` frames, scene i given by `scene_at(i)`.
class SyntheticSource final : public FrameSource {
 public:
  SyntheticSource(std::function<FaceScene(std::size_t)> scene_at, std::size_t count, double frame_rate = 30.0);
  std::optional<GrayFrame> next() override;
  double frame_rate() const override { return rate_; }

 private:
  std::function<FaceScene(std::size_t)> scene_at_;
  std::size_t count_;
  std::size_t cursor_ = 0;
  double rate_;
};

}  // namespace ocugaze
