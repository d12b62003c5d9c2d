#pragma once

#include <memory>

#include "ocugaze/frame_source.hpp"

namespace ocugaze {

/// Camera by device index. Throws Error(device_unavailable) when the build
/// has no capture backend or the device cannot be opened.
std::unique_ptr<FrameSource> open_camera(int index);

bool camera_support_compiled();

}  // namespace ocugaze
