#pragma once

#include <cstdint>
#include <vector>

#include "ocugaze/image.hpp"

namespace ocugaze {

/// Luma conversion with weights 0.299/0.587/0.114, rounded to nearest.
GrayFrame to_gray(const RgbImage& rgb);

GrayFrame invert(const GrayFrame& g);

GrayFrame flip_horizontal(const GrayFrame& g);

/// Copies the part of `r` that lies inside the frame. Throws
/// Error(extraction) if nothing remains after clipping.
GrayFrame crop(const GrayFrame& g, const Rect& r);

/// Summed-area table of (width+1) x (height+1) 64-bit entries. Entry (x, y)
/// holds the sum of all pixels strictly above-left of (x, y).
class IntegralImage {
 public:
  IntegralImage() = default;
  IntegralImage(int width, int height);

  int width() const noexcept { return width_; }    // source width
  int height() const noexcept { return height_; }  // source height

  std::int64_t at(int x, int y) const {
    return table_[static_cast<std::size_t>(y) * stride_ + x];
  }
  std::int64_t& at(int x, int y) {
    return table_[static_cast<std::size_t>(y) * stride_ + x];
  }

  std::int64_t rect_sum(int x, int y, int w, int h) const {
    return at(x + w, y + h) - at(x, y + h) - at(x + w, y) + at(x, y);
  }

  const std::int64_t* data() const noexcept { return table_.data(); }
  int stride() const noexcept { return stride_; }

 private:
  int width_ = 0;
  int height_ = 0;
  int stride_ = 0;
  std::vector<std::int64_t> table_;
};

IntegralImage integral(const GrayFrame& g);
IntegralImage squared_integral(const GrayFrame& g);

/// Zeroes every 255-pixel 4-connected to a 255-pixel on the image border.
/// Throws Error(precondition) if the input has values other than 0/255.
GrayFrame clear_border_components(const GrayFrame& binary);

struct DownscaleResult {
  GrayFrame frame;
  bool warning = false;  // requested size was larger than the source; frame is unchanged
};

/// Area-average (box) resampling to `target_height` rows with the width
/// scaled by the same factor. Requires target_height >= 8.
DownscaleResult downscale(const GrayFrame& g, int target_height);

/// Square real kernel, K odd. at(i, j): i is the column offset, j the row.
class Kernel {
 public:
  Kernel(int size, std::vector<double> weights);

  int size() const noexcept { return size_; }
  double at(int i, int j) const { return weights_[static_cast<std::size_t>(j) * size_ + i]; }
  const std::vector<double>& weights() const noexcept { return weights_; }

 private:
  int size_;
  std::vector<double> weights_;
};

/// response(x,y) = sum kernel(i,j) * g(x+i-K/2, y+j-K/2), zero padded.
RealImage convolve(const RealImage& g, const Kernel& kernel);
RealImage convolve(const GrayFrame& g, const Kernel& kernel);

/// Otsu's threshold: the level t maximizing between-class variance when
/// the classes are {p <= t} and {p > t}.
int otsu_threshold(const GrayFrame& g);

/// 255 where p > threshold, 0 elsewhere.
GrayFrame binarize(const GrayFrame& g, int threshold);

}  // namespace ocugaze
