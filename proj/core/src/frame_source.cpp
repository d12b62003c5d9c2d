#include "ocugaze/frame_source.hpp"

#include <algorithm>
#include <cctype>
#include <string>

#include "ocugaze/error.hpp"
#include "ocugaze/pgm.hpp"

namespace ocugaze {
namespace {

// Value of the last digit run in the stem, or -1.
long long frame_number(const std::filesystem::path& p) {
  const std::string stem = p.stem().string();
  auto end = stem.size();
  while (end > 0 && !std::isdigit(static_cast<unsigned char>(stem[end - 1]))) --end;
  auto begin = end;
  while (begin > 0 && std::isdigit(static_cast<unsigned char>(stem[begin - 1]))) --begin;
  if (begin == end) return -1;
  return std::stoll(stem.substr(begin, std::min<std::size_t>(end - begin, 18)));
}

}  // namespace

PgmDirectorySource::PgmDirectorySource(const std::filesystem::path& dir, double frame_rate) : rate_(frame_rate) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw Error(ErrorKind::io, "frame directory not found: " + dir.string());
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") files_.push_back(entry.path());
  }
  if (files_.empty()) throw Error(ErrorKind::io, "no .pgm frames in " + dir.string());
  std::sort(files_.begin(), files_.end(), [](const auto& a, const auto& b) {
    const auto na = frame_number(a);
    const auto nb = frame_number(b);
    if (na != nb) return na < nb;
    return a.filename() < b.filename();
  });
  if (!(rate_ > 0.0)) throw Error(ErrorKind::parameter, "frame rate must be positive");
}

std::optional<GrayFrame> PgmDirectorySource::next() {
  if (cursor_ >= files_.size()) return std::nullopt;
  return read_pgm(files_[cursor_++]);
}

SyntheticSource::SyntheticSource(std::function<FaceScene(std::size_t)> scene_at, std::size_t count, double frame_rate)
    : scene_at_(std::move(scene_at)), count_(count), rate_(frame_rate) {
  if (!(rate_ > 0.0)) throw Error(ErrorKind::parameter, "frame rate must be positive");
}

std::optional<GrayFrame> SyntheticSource::next() {
  if (cursor_ >= count_) return std::nullopt;
  return render_face(scene_at_(cursor_++)).frame;
}

}  // namespace ocugaze
