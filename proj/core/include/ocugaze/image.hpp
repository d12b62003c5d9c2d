#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ocugaze {

/// Single-channel 8-bit raster, row-major. Every pixel operation in the
/// library works on this type.
class GrayFrame {
 public:
  GrayFrame() = default;
  /// Throws Error(dimension) when either side is not positive.
  GrayFrame(int width, int height, std::uint8_t fill = 0);
  /// Throws Error(dimension) when data.size() != width * height.
  GrayFrame(int width, int height, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t size() const noexcept { return data_.size(); }

  std::uint8_t at(int x, int y) const { return data_[index(x, y)]; }
  std::uint8_t& at(int x, int y) { return data_[index(x, y)]; }
  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  std::span<const std::uint8_t> pixels() const noexcept { return data_; }
  std::span<std::uint8_t> pixels() noexcept { return data_; }
  std::span<const std::uint8_t> row(int y) const {
    return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
  }

  double mean() const noexcept;

  friend bool operator==(const GrayFrame&, const GrayFrame&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Interleaved 8-bit R,G,B raster.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // 3 * width * height
};

/// Real-valued single-channel raster; convolution responses live here.
class RealImage {
 public:
  RealImage() = default;
  RealImage(int width, int height, double fill = 0.0);
  explicit RealImage(const GrayFrame& frame);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  double at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  double& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  long long area() const noexcept { return static_cast<long long>(w) * h; }
  friend bool operator==(const Rect&, const Rect&) = default;
};

double intersection_over_union(const Rect& a, const Rect& b);

}  // namespace ocugaze
