#include "camera.hpp"

#include <string>

#include "ocugaze/error.hpp"

#ifdef OCUGAZE_HAVE_OPENCV
#include <opencv2/imgproc.hpp>
#include <opencv2/videoio.hpp>
#endif

namespace ocugaze {

#ifdef OCUGAZE_HAVE_OPENCV

namespace {

class CameraSource final : public FrameSource {
 public:
  explicit CameraSource(int index) : capture_(index) {
    if (!capture_.isOpened()) {
      throw Error(ErrorKind::device_unavailable, "cannot open camera " + std::to_string(index));
    }
    const double fps = capture_.get(cv::CAP_PROP_FPS);
    rate_ = fps > 0.0 ? fps : 30.0;
  }

  std::optional<GrayFrame> next() override {
    cv::Mat bgr;
    if (!capture_.read(bgr) || bgr.empty()) return std::nullopt;
    cv::Mat gray;
    if (bgr.channels() == 1) {
      gray = bgr;
    } else {
      cv::cvtColor(bgr, gray, cv::COLOR_BGR2GRAY);
    }
    GrayFrame out(gray.cols, gray.rows);
    for (int y = 0; y < gray.rows; ++y) {
      const auto* row = gray.ptr<std::uint8_t>(y);
      std::copy(row, row + gray.cols, out.pixels().begin() + static_cast<std::ptrdiff_t>(y) * gray.cols);
    }
    return out;
  }

  double frame_rate() const override { return rate_; }

 private:
  cv::VideoCapture capture_;
  double rate_ = 30.0;
};

}  // namespace

std::unique_ptr<FrameSource> open_camera(int index) { return std::make_unique<CameraSource>(index); }
bool camera_support_compiled() { return true; }

#else

std::unique_ptr<FrameSource> open_camera(int index) {
  throw Error(ErrorKind::device_unavailable,
              "camera " + std::to_string(index) + " unavailable: built without a capture backend");
}
bool camera_support_compiled() { return false; }

#endif

}  // namespace ocugaze
