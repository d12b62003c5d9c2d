#include "ocugaze/imgproc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include "ocugaze/error.hpp"

namespace ocugaze {

GrayFrame::GrayFrame(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorKind::dimension, "frame dimensions must be positive, got " +
                                          std::to_string(width) + "x" + std::to_string(height));
  }
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayFrame::GrayFrame(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorKind::dimension, "frame dimensions must be positive, got " +
                                          std::to_string(width) + "x" + std::to_string(height));
  }
  if (data_.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorKind::dimension, "pixel buffer holds " + std::to_string(data_.size()) +
                                          " values, expected " +
                                          std::to_string(static_cast<std::size_t>(width) * height));
  }
}

double GrayFrame::mean() const noexcept {
  if (data_.empty()) return 0.0;
  const auto total = std::accumulate(data_.begin(), data_.end(), std::uint64_t{0});
  return static_cast<double>(total) / static_cast<double>(data_.size());
}

RealImage::RealImage(int width, int height, double fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorKind::dimension, "image dimensions must be positive");
  }
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

RealImage::RealImage(const GrayFrame& frame)
    : width_(frame.width()), height_(frame.height()), data_(frame.pixels().begin(), frame.pixels().end()) {}

double intersection_over_union(const Rect& a, const Rect& b) {
  const int x0 = std::max(a.x, b.x);
  const int y0 = std::max(a.y, b.y);
  const int x1 = std::min(a.x + a.w, b.x + b.w);
  const int y1 = std::min(a.y + a.h, b.y + b.h);
  if (x1 <= x0 || y1 <= y0) return 0.0;
  const double inter = static_cast<double>(x1 - x0) * (y1 - y0);
  const double uni = static_cast<double>(a.area()) + static_cast<double>(b.area()) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

GrayFrame to_gray(const RgbImage& rgb) {
  if (rgb.width <= 0 || rgb.height <= 0) {
    throw Error(ErrorKind::dimension, "cannot convert a zero-sized image");
  }
  const auto n = static_cast<std::size_t>(rgb.width) * rgb.height;
  if (rgb.data.size() != 3 * n) {
    throw Error(ErrorKind::dimension, "RGB buffer size does not match 3*width*height");
  }
  std::vector<std::uint8_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double luma = 0.299 * rgb.data[3 * i] + 0.587 * rgb.data[3 * i + 1] + 0.114 * rgb.data[3 * i + 2];
    out[i] = static_cast<std::uint8_t>(std::clamp(std::lround(luma), 0L, 255L));
  }
  return GrayFrame(rgb.width, rgb.height, std::move(out));
}

GrayFrame invert(const GrayFrame& g) {
  GrayFrame out = g;
  for (auto& p : out.pixels()) p = static_cast<std::uint8_t>(255 - p);
  return out;
}

GrayFrame flip_horizontal(const GrayFrame& g) {
  GrayFrame out(g.width(), g.height());
  for (int y = 0; y < g.height(); ++y)
    for (int x = 0; x < g.width(); ++x) out.at(g.width() - 1 - x, y) = g.at(x, y);
  return out;
}

GrayFrame crop(const GrayFrame& g, const Rect& r) {
  const int x0 = std::max(r.x, 0);
  const int y0 = std::max(r.y, 0);
  const int x1 = std::min(r.x + r.w, g.width());
  const int y1 = std::min(r.y + r.h, g.height());
  if (x1 <= x0 || y1 <= y0) {
    throw Error(ErrorKind::extraction, "crop rectangle lies outside the frame");
  }
  GrayFrame out(x1 - x0, y1 - y0);
  for (int y = y0; y < y1; ++y) {
    const auto src = g.row(y).subspan(static_cast<std::size_t>(x0), static_cast<std::size_t>(x1 - x0));
    std::copy(src.begin(), src.end(), out.pixels().begin() + static_cast<std::ptrdiff_t>(y - y0) * out.width());
  }
  return out;
}

IntegralImage::IntegralImage(int width, int height)
    : width_(width), height_(height), stride_(width + 1),
      table_(static_cast<std::size_t>(width + 1) * (height + 1), 0) {}

namespace {

template <typename Transform>
IntegralImage build_integral(const GrayFrame& g, Transform transform) {
  IntegralImage table(g.width(), g.height());
  for (int y = 0; y < g.height(); ++y) {
    std::int64_t row_sum = 0;
    const auto row = g.row(y);
    for (int x = 0; x < g.width(); ++x) {
      row_sum += transform(static_cast<std::int64_t>(row[static_cast<std::size_t>(x)]));
      table.at(x + 1, y + 1) = table.at(x + 1, y) + row_sum;
    }
  }
  return table;
}

}  // namespace

IntegralImage integral(const GrayFrame& g) {
  return build_integral(g, [](std::int64_t v) { return v; });
}

IntegralImage squared_integral(const GrayFrame& g) {
  return build_integral(g, [](std::int64_t v) { return v * v; });
}

GrayFrame clear_border_components(const GrayFrame& binary) {
  for (auto p : binary.pixels()) {
    if (p != 0 && p != 255) {
      throw Error(ErrorKind::precondition, "clear_border_components expects a 0/255 binary image");
    }
  }
  GrayFrame out = binary;
  const int w = out.width();
  const int h = out.height();
  std::vector<std::pair<int, int>> stack;
  auto seed = [&](int x, int y) {
    if (out.at(x, y) == 255) {
      out.at(x, y) = 0;
      stack.emplace_back(x, y);
    }
  };
  for (int x = 0; x < w; ++x) {
    seed(x, 0);
    seed(x, h - 1);
  }
  for (int y = 0; y < h; ++y) {
    seed(0, y);
    seed(w - 1, y);
  }
  while (!stack.empty()) {
    const auto [x, y] = stack.back();
    stack.pop_back();
    if (x > 0) seed(x - 1, y);
    if (x + 1 < w) seed(x + 1, y);
    if (y > 0) seed(x, y - 1);
    if (y + 1 < h) seed(x, y + 1);
  }
  return out;
}

namespace {

// Coverage weights for resampling `src` samples onto `dst` samples where each
// destination sample averages an interval of length src/dst.
struct AreaTap {
  int index;
  double weight;
};

std::vector<std::vector<AreaTap>> area_taps(int src, int dst) {
  std::vector<std::vector<AreaTap>> taps(static_cast<std::size_t>(dst));
  const double span = static_cast<double>(src) / dst;
  for (int o = 0; o < dst; ++o) {
    const double lo = o * span;
    const double hi = (o + 1) * span;
    for (int s = static_cast<int>(std::floor(lo)); s < src && s < hi; ++s) {
      const double overlap = std::min<double>(s + 1, hi) - std::max<double>(s, lo);
      if (overlap > 1e-12) taps[static_cast<std::size_t>(o)].push_back({s, overlap / span});
    }
  }
  return taps;
}

}  // namespace

DownscaleResult downscale(const GrayFrame& g, int target_height) {
  if (target_height < 8) {
    throw Error(ErrorKind::parameter, "downscale target height must be at least 8");
  }
  if (target_height >= g.height()) {
    return {g, target_height > g.height()};
  }
  const double factor = static_cast<double>(target_height) / g.height();
  const int target_width = std::max(1, static_cast<int>(std::lround(g.width() * factor)));

  const auto col_taps = area_taps(g.width(), target_width);
  const auto row_taps = area_taps(g.height(), target_height);

  std::vector<double> horizontal(static_cast<std::size_t>(target_width) * g.height());
  for (int y = 0; y < g.height(); ++y) {
    const auto row = g.row(y);
    for (int ox = 0; ox < target_width; ++ox) {
      double acc = 0.0;
      for (const auto& tap : col_taps[static_cast<std::size_t>(ox)]) acc += tap.weight * row[static_cast<std::size_t>(tap.index)];
      horizontal[static_cast<std::size_t>(y) * target_width + ox] = acc;
    }
  }

  GrayFrame out(target_width, target_height);
  for (int oy = 0; oy < target_height; ++oy) {
    for (int ox = 0; ox < target_width; ++ox) {
      double acc = 0.0;
      for (const auto& tap : row_taps[static_cast<std::size_t>(oy)])
        acc += tap.weight * horizontal[static_cast<std::size_t>(tap.index) * target_width + ox];
      out.at(ox, oy) = static_cast<std::uint8_t>(std::clamp(std::lround(acc), 0L, 255L));
    }
  }
  return {std::move(out), false};
}

Kernel::Kernel(int size, std::vector<double> weights) : size_(size), weights_(std::move(weights)) {
  if (size <= 0 || size % 2 == 0) {
    throw Error(ErrorKind::parameter, "kernel size must be odd and positive, got " + std::to_string(size));
  }
  if (weights_.size() != static_cast<std::size_t>(size) * size) {
    throw Error(ErrorKind::parameter, "kernel weight count does not match size*size");
  }
}

RealImage convolve(const RealImage& g, const Kernel& kernel) {
  const int k = kernel.size();
  if (k > std::min(g.width(), g.height())) {
    throw Error(ErrorKind::parameter, "kernel is larger than the image");
  }
  const int half = k / 2;
  RealImage out(g.width(), g.height());
  for (int y = 0; y < g.height(); ++y) {
    for (int x = 0; x < g.width(); ++x) {
      double acc = 0.0;
      for (int j = 0; j < k; ++j) {
        const int sy = y + j - half;
        if (sy < 0 || sy >= g.height()) continue;
        for (int i = 0; i < k; ++i) {
          const int sx = x + i - half;
          if (sx < 0 || sx >= g.width()) continue;
          acc += kernel.at(i, j) * g.at(sx, sy);
        }
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

RealImage convolve(const GrayFrame& g, const Kernel& kernel) {
  return convolve(RealImage(g), kernel);
}

int otsu_threshold(const GrayFrame& g) {
  std::array<std::uint64_t, 256> hist{};
  for (auto p : g.pixels()) ++hist[p];
  const double total = static_cast<double>(g.size());
  double sum_all = 0.0;
  for (int v = 0; v < 256; ++v) sum_all += static_cast<double>(v) * static_cast<double>(hist[static_cast<std::size_t>(v)]);

  double w0 = 0.0;
  double sum0 = 0.0;
  double best = -1.0;
  int best_t = -1;
  for (int t = 0; t < 255; ++t) {
    w0 += static_cast<double>(hist[static_cast<std::size_t>(t)]);
    sum0 += static_cast<double>(t) * static_cast<double>(hist[static_cast<std::size_t>(t)]);
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double mu0 = sum0 / w0;
    const double mu1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (between > best) {
      best = between;
      best_t = t;
    }
  }
  if (best_t < 0) {
    // Single-level image: put everything in the lower class.
    return *std::max_element(g.pixels().begin(), g.pixels().end());
  }
  return best_t;
}

GrayFrame binarize(const GrayFrame& g, int threshold) {
  GrayFrame out(g.width(), g.height());
  auto src = g.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > threshold ? 255 : 0;
  return out;
}

}  // namespace ocugaze
