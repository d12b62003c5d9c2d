#pragma once

#include <array>
#include <deque>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "ocugaze/eye_region.hpp"
#include "ocugaze/image.hpp"
#include "ocugaze/imgproc.hpp"

namespace ocugaze {

inline constexpr int kClassCount = 9;

/// Screen direction of the point of gaze. Labels 1..9 in this order.
enum class GazeClass : int {
  north_west = 1,
  north = 2,
  north_east = 3,
  east = 4,
  south_east = 5,
  south = 6,
  south_west = 7,
  west = 8,
  center = 9,
};

inline int label(GazeClass c) { return static_cast<int>(c); }
/// Throws Error(parameter) outside 1..9.
GazeClass gaze_class(int label);
std::string_view direction_name(GazeClass c);
/// Grid cell (row, col) of a 3x3 layout, row 0 on top.
std::pair<int, int> grid_cell(GazeClass c);

/// 5x5 binomial kernel: outer product of [1,2,4,2,1]/10 with itself.
Kernel iris_kernel();

/// Number of candidate maxima evaluated for an ROI of this mean intensity;
/// darker ROIs get more candidates (1..5).
int candidate_budget(double mean_intensity);

/// Dark-structure mask of an eye crop: inverted, Otsu-binarized, with
/// border-connected blobs cleared.
GrayFrame eye_mask(const GrayFrame& crop);

/// Inverted crop kept only where `mask` is set, convolved with iris_kernel().
RealImage iris_response(const GrayFrame& crop, const GrayFrame& mask);

struct IrisCenter {
  double x = 0.0;  // sub-pixel, ROI coordinates
  double y = 0.0;
  int pixel_x = 0;  // winning response pixel
  int pixel_y = 0;
  double response = 0.0;
  int candidate_count = 0;  // candidates evaluated under the lighting budget
};

/// Throws Error(localization) when no foreground survives border clearing.
IrisCenter locate_iris(const GrayFrame& crop, const GrayFrame& mask);
IrisCenter locate_iris(const EyeRoi& roi);

/// Six eyelid points, numbered as in the usual EAR formulation:
/// p1/p4 are the horizontal corners, p2/p3 on the upper lid, p6/p5 on the
/// lower lid (p2 and p6 share a column, as do p3 and p5).
struct EyelidLandmarks {
  std::array<Point, 6> points{};

  const Point& p(int n) const { return points[static_cast<std::size_t>(n - 1)]; }
  Point& p(int n) { return points[static_cast<std::size_t>(n - 1)]; }
};

/// Landmarks from a binary eye mask. Throws Error(landmark) when the corner
/// span is under 4 px, the foreground spans the whole mask width, or a
/// sampling column is empty.
EyelidLandmarks eyelid_landmarks(const GrayFrame& mask);

/// (|p2-p6| + |p3-p5|) / (2 |p1-p4|). Throws Error(parameter) when p1 == p4.
double eye_aspect_ratio(const EyelidLandmarks& lm);

/// iris.x minus the x of the corner midpoint, in ROI pixels.
double displacement(const IrisCenter& iris, const EyelidLandmarks& lm);

struct OcularFeatureVector {
  double aspect_ratio = 0.0;
  double min_r = 0.0;
  double max_r = 0.0;
  double displacement = 0.0;
  double min_d = 0.0;
  double max_d = 0.0;

  std::array<double, 6> values() const { return {aspect_ratio, min_r, max_r, displacement, min_d, max_d}; }
  static OcularFeatureVector from(std::span<const double, 6> v) { return {v[0], v[1], v[2], v[3], v[4], v[5]}; }
  friend bool operator==(const OcularFeatureVector&, const OcularFeatureVector&) = default;
};

inline constexpr std::size_t kFeatureCount = 6;

/// Trailing-window extrema of EAR and displacement over the last K samples.
/// Owned by a single stream worker.
class FeatureAccumulator {
 public:
  explicit FeatureAccumulator(int window = 25);

  OcularFeatureVector push(double ear, double displacement);
  void reset() { samples_.clear(); }
  std::size_t size() const noexcept { return samples_.size(); }
  int window() const noexcept { return window_; }

 private:
  int window_;
  std::deque<std::pair<double, double>> samples_;
};

std::vector<OcularFeatureVector> assemble_features(std::span<const std::pair<double, double>> stream, int window);

/// Everything measured on one normalized ROI.
struct EyeObservation {
  GrayFrame mask;
  IrisCenter iris;
  EyelidLandmarks landmarks;
  double ear = 0.0;
  double displacement = 0.0;
};

EyeObservation observe_eye(const EyeRoi& roi);

}  // namespace ocugaze
