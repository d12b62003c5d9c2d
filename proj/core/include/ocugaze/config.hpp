#pragma once

#include <filesystem>
#include <string_view>

#include "ocugaze/nn.hpp"
#include "ocugaze/pipeline.hpp"
#include "ocugaze/session.hpp"

namespace ocugaze {

struct AppConfig {
  std::filesystem::path cascade_path;  // empty: default_cascade_path()
  PipelineConfig pipeline;
  TrainConfig train;
  SessionConfig session;
};

/// INI / TOML-style key = value text with optional [section] headers and
/// '#' or ';' comments. Recognized keys:
///
///   [detector] cascade, min_face_size, scale_factor, merge_iou, min_group
///   [roi]      eye, top, bottom, left_eye_begin, left_eye_end,
///              right_eye_begin, right_eye_end, target_height, stretch_below_mean
///   [features] window
///   [smoothing] window
///   [net]      hidden_sizes            (e.g. [32, 24, 16])
///   [train]    learning_rate, momentum, batch_size, epochs, seed
///   [session]  dwell_s, discard_s
///
/// Unknown keys and malformed values raise Error(configuration).
AppConfig parse_config(std::string_view text);
AppConfig load_config(const std::filesystem::path& path);

/// The bundled frontal-face cascade: $OCUGAZE_CASCADE if set, else the
/// source tree's data directory, else the installed data directory.
std::filesystem::path default_cascade_path();

}  // namespace ocugaze
