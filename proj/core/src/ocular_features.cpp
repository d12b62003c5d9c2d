#include "ocugaze/ocular_features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ocugaze/error.hpp"

namespace ocugaze {

GazeClass gaze_class(int label) {
  if (label < 1 || label > kClassCount) {
    throw Error(ErrorKind::parameter, "gaze class label must be in 1..9, got " + std::to_string(label));
  }
  return static_cast<GazeClass>(label);
}

std::string_view direction_name(GazeClass c) {
  switch (c) {
    case GazeClass::north_west: return "north-west";
    case GazeClass::north: return "north";
    case GazeClass::north_east: return "north-east";
    case GazeClass::east: return "east";
    case GazeClass::south_east: return "south-east";
    case GazeClass::south: return "south";
    case GazeClass::south_west: return "south-west";
    case GazeClass::west: return "west";
    case GazeClass::center: return "center";
  }
  return "unknown";
}

std::pair<int, int> grid_cell(GazeClass c) {
  switch (c) {
    case GazeClass::north_west: return {0, 0};
    case GazeClass::north: return {0, 1};
    case GazeClass::north_east: return {0, 2};
    case GazeClass::east: return {1, 2};
    case GazeClass::south_east: return {2, 2};
    case GazeClass::south: return {2, 1};
    case GazeClass::south_west: return {2, 0};
    case GazeClass::west: return {1, 0};
    case GazeClass::center: return {1, 1};
  }
  return {1, 1};
}

Kernel iris_kernel() {
  constexpr std::array<double, 5> taps{1.0, 2.0, 4.0, 2.0, 1.0};
  std::vector<double> w;
  w.reserve(25);
  for (double row : taps)
    for (double col : taps) w.push_back(row * col / 100.0);
  return Kernel(5, std::move(w));
}

int candidate_budget(double mean_intensity) {
  const double darkness = 1.0 - std::clamp(mean_intensity, 0.0, 255.0) / 255.0;
  return std::clamp(1 + static_cast<int>(std::floor(5.0 * darkness)), 1, 5);
}

GrayFrame eye_mask(const GrayFrame& crop) {
  const GrayFrame inverted = invert(crop);
  return clear_border_components(binarize(inverted, otsu_threshold(inverted)));
}

RealImage iris_response(const GrayFrame& crop, const GrayFrame& mask) {
  RealImage masked(crop.width(), crop.height());
  const auto src = crop.pixels();
  const auto m = mask.pixels();
  auto dst = masked.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = m[i] ? 255.0 - src[i] : 0.0;
  return convolve(masked, iris_kernel());
}

namespace {

// A local maximum of the response. Flat tops are kept whole so their
// centroid, not an arbitrary corner, stands for the candidate.
struct Candidate {
  double response = 0.0;
  Point centroid;
  double center_distance = 0.0;
  std::vector<std::pair<int, int>> pixels;
};

std::vector<Candidate> local_maxima(const RealImage& response) {
  const int w = response.width();
  const int h = response.height();
  std::vector<char> visited(static_cast<std::size_t>(w) * h, 0);
  std::vector<Candidate> out;
  std::vector<std::pair<int, int>> stack;
  const Point roi_center{(w - 1) / 2.0, (h - 1) / 2.0};

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = response.at(x, y);
      if (v <= 0.0 || visited[static_cast<std::size_t>(y) * w + x]) continue;
      Candidate c;
      c.response = v;
      bool is_max = true;
      stack.assign(1, {x, y});
      visited[static_cast<std::size_t>(y) * w + x] = 1;
      while (!stack.empty()) {
        const auto [px, py] = stack.back();
        stack.pop_back();
        c.pixels.emplace_back(px, py);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = px + dx;
            const int ny = py + dy;
            if ((dx == 0 && dy == 0) || nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const double nv = response.at(nx, ny);
            if (nv > v) {
              is_max = false;
            } else if (nv == v && !visited[static_cast<std::size_t>(ny) * w + nx]) {
              visited[static_cast<std::size_t>(ny) * w + nx] = 1;
              stack.emplace_back(nx, ny);
            }
          }
        }
      }
      if (!is_max) continue;
      double sx = 0.0;
      double sy = 0.0;
      for (const auto& [px, py] : c.pixels) {
        sx += px;
        sy += py;
      }
      c.centroid = {sx / static_cast<double>(c.pixels.size()), sy / static_cast<double>(c.pixels.size())};
      c.center_distance = std::hypot(c.centroid.x - roi_center.x, c.centroid.y - roi_center.y);
      out.push_back(std::move(c));
    }
  }
  return out;
}

}  // namespace

IrisCenter locate_iris(const GrayFrame& crop, const GrayFrame& mask) {
  if (crop.width() != mask.width() || crop.height() != mask.height()) {
    throw Error(ErrorKind::dimension, "iris mask does not match the ROI size");
  }
  if (std::none_of(mask.pixels().begin(), mask.pixels().end(), [](auto p) { return p != 0; })) {
    throw Error(ErrorKind::localization, "no dark structure left after border clearing");
  }
  if (std::min(crop.width(), crop.height()) < 5) {
    throw Error(ErrorKind::localization, "ROI smaller than the iris kernel");
  }

  const RealImage response = iris_response(crop, mask);
  auto candidates = local_maxima(response);
  if (candidates.empty()) {
    throw Error(ErrorKind::localization, "iris response has no positive maximum");
  }

  const int budget = candidate_budget(crop.mean());
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.response != b.response) return a.response > b.response;
    if (a.center_distance != b.center_distance) return a.center_distance < b.center_distance;
    return std::tie(a.centroid.y, a.centroid.x) < std::tie(b.centroid.y, b.centroid.x);
  });
  if (static_cast<int>(candidates.size()) > budget) candidates.resize(static_cast<std::size_t>(budget));
  const Candidate& winner = candidates.front();

  // Representative pixel: the plateau pixel closest to the plateau centroid.
  auto rep = winner.pixels.front();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [px, py] : winner.pixels) {
    const double d = std::hypot(px - winner.centroid.x, py - winner.centroid.y);
    if (d < best || (d == best && std::tie(py, px) < std::tie(rep.second, rep.first))) {
      best = d;
      rep = {px, py};
    }
  }

  // Response-weighted centroid over the 3x3 neighbourhood of the maximum.
  const int w = response.width();
  const int h = response.height();
  std::vector<char> used(static_cast<std::size_t>(w) * h, 0);
  double sum = 0.0;
  double sx = 0.0;
  double sy = 0.0;
  for (const auto& [px, py] : winner.pixels) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = px + dx;
        const int ny = py + dy;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        auto& flag = used[static_cast<std::size_t>(ny) * w + nx];
        if (flag) continue;
        flag = 1;
        const double r = response.at(nx, ny);
        sum += r;
        sx += r * nx;
        sy += r * ny;
      }
    }
  }

  IrisCenter iris;
  iris.x = sx / sum;
  iris.y = sy / sum;
  iris.pixel_x = rep.first;
  iris.pixel_y = rep.second;
  iris.response = winner.response;
  iris.candidate_count = budget;
  return iris;
}

IrisCenter locate_iris(const EyeRoi& roi) { return locate_iris(roi.crop, eye_mask(roi.crop)); }

EyelidLandmarks eyelid_landmarks(const GrayFrame& mask) {
  const int w = mask.width();
  const int h = mask.height();
  int left_x = w;
  int left_y = 0;
  int right_x = -1;
  int right_y = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y)) continue;
      if (x < left_x) {
        left_x = x;
        left_y = y;
      }
      if (x > right_x) {
        right_x = x;
        right_y = y;
      }
    }
  }
  if (right_x < 0) throw Error(ErrorKind::landmark, "eye mask is empty");
  if (left_x == 0 && right_x == w - 1) {
    throw Error(ErrorKind::landmark, "foreground spans the whole ROI; eye contour is not separable");
  }
  const int span = right_x - left_x;
  if (span < 4) throw Error(ErrorKind::landmark, "eye corner span below 4 px");

  const auto lid_points = [&](int column) {
    int top = -1;
    int bottom = -1;
    for (int y = 0; y < h; ++y) {
      if (mask.at(column, y)) {
        if (top < 0) top = y;
        bottom = y;
      }
    }
    if (top < 0) throw Error(ErrorKind::landmark, "no eyelid contour in sampling column");
    return std::pair{top, bottom};
  };
  const int col_a = static_cast<int>(std::lround(left_x + span / 3.0));
  const int col_b = static_cast<int>(std::lround(left_x + 2.0 * span / 3.0));
  const auto [top_a, bottom_a] = lid_points(col_a);
  const auto [top_b, bottom_b] = lid_points(col_b);

  EyelidLandmarks lm;
  lm.p(1) = {static_cast<double>(left_x), static_cast<double>(left_y)};
  lm.p(2) = {static_cast<double>(col_a), static_cast<double>(top_a)};
  lm.p(3) = {static_cast<double>(col_b), static_cast<double>(top_b)};
  lm.p(4) = {static_cast<double>(right_x), static_cast<double>(right_y)};
  lm.p(5) = {static_cast<double>(col_b), static_cast<double>(bottom_b)};
  lm.p(6) = {static_cast<double>(col_a), static_cast<double>(bottom_a)};
  return lm;
}

namespace {
double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }
}  // namespace

double eye_aspect_ratio(const EyelidLandmarks& lm) {
  const double corners = distance(lm.p(1), lm.p(4));
  if (corners == 0.0) throw Error(ErrorKind::parameter, "eye corners coincide");
  return (distance(lm.p(2), lm.p(6)) + distance(lm.p(3), lm.p(5))) / (2.0 * corners);
}

double displacement(const IrisCenter& iris, const EyelidLandmarks& lm) {
  return iris.x - (lm.p(1).x + lm.p(4).x) / 2.0;
}

FeatureAccumulator::FeatureAccumulator(int window) : window_(window) {
  if (window < 1) throw Error(ErrorKind::parameter, "feature window must be at least 1");
}

OcularFeatureVector FeatureAccumulator::push(double ear, double disp) {
  samples_.emplace_back(ear, disp);
  while (samples_.size() > static_cast<std::size_t>(window_)) samples_.pop_front();
  OcularFeatureVector v{ear, ear, ear, disp, disp, disp};
  for (const auto& [r, d] : samples_) {
    v.min_r = std::min(v.min_r, r);
    v.max_r = std::max(v.max_r, r);
    v.min_d = std::min(v.min_d, d);
    v.max_d = std::max(v.max_d, d);
  }
  return v;
}

std::vector<OcularFeatureVector> assemble_features(std::span<const std::pair<double, double>> stream, int window) {
  FeatureAccumulator acc(window);
  std::vector<OcularFeatureVector> out;
  out.reserve(stream.size());
  for (const auto& [ear, disp] : stream) out.push_back(acc.push(ear, disp));
  return out;
}

EyeObservation observe_eye(const EyeRoi& roi) {
  EyeObservation obs;
  obs.mask = eye_mask(roi.crop);
  obs.iris = locate_iris(roi.crop, obs.mask);
  obs.landmarks = eyelid_landmarks(obs.mask);
  obs.ear = eye_aspect_ratio(obs.landmarks);
  obs.displacement = displacement(obs.iris, obs.landmarks);
  return obs;
}

}  // namespace ocugaze
