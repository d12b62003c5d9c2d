#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ocugaze/ocular_features.hpp"

namespace ocugaze {

struct LabeledInstance {
  OcularFeatureVector features;
  GazeClass label = GazeClass::center;
  std::string session_id;       // not stored in the CSV; see SessionMetadata
  std::int64_t timestamp_ms = 0;

  friend bool operator==(const LabeledInstance& a, const LabeledInstance& b) {
    return a.features == b.features && a.label == b.label;
  }
};

inline constexpr std::string_view kDatasetHeader = "aspect_ratio,min_r,max_r,displacement,min_d,max_d,class";

/// One CSV row, 9 significant digits per value, no trailing newline.
std::string format_row(const LabeledInstance& instance);
std::string format_dataset(std::span<const LabeledInstance> instances);

/// Throws Error(parse) naming the 1-based file line on header mismatch,
/// non-numeric cells, wrong column counts or labels outside 1..9.
std::vector<LabeledInstance> parse_dataset(std::string_view text);

void write_dataset(const std::filesystem::path& path, std::span<const LabeledInstance> instances);
/// Appends rows, writing the header first if the file is new or empty.
void append_dataset(const std::filesystem::path& path, std::span<const LabeledInstance> instances);
std::vector<LabeledInstance> read_dataset(const std::filesystem::path& path);

/// One recording session appended to a dataset file. Stored in the sidecar
/// "<dataset>.meta.json".
struct SessionMetadata {
  std::string session_id;
  std::string subject;
  double frame_rate = 0.0;
  std::size_t first_row = 0;  // 0-based data row index
  std::size_t rows = 0;
  std::vector<std::int64_t> timestamps_ms;
};

std::filesystem::path metadata_path(const std::filesystem::path& dataset);
void append_session_metadata(const std::filesystem::path& dataset, const SessionMetadata& session);
std::vector<SessionMetadata> read_session_metadata(const std::filesystem::path& dataset);

std::array<std::size_t, kClassCount> class_counts(std::span<const LabeledInstance> instances);

struct SplitSpec {
  double train_fraction = 0.9;
  std::uint64_t seed = 7;
  bool balanced = false;
};

struct Split {
  std::vector<LabeledInstance> train;
  std::vector<LabeledInstance> test;
  std::vector<std::size_t> train_index;  // positions in the input, ascending
  std::vector<std::size_t> test_index;
};

/// Seeded per-class shuffle, then a stratified cut of round(n_c * (1 - f))
/// test rows per class. With `balanced`, every present class keeps the same
/// number of test rows (the smallest class's count); the surplus returns to
/// train. Throws Error(split) if a present class has fewer than 10 rows in
/// balanced mode.
Split split(std::span<const LabeledInstance> instances, const SplitSpec& spec);

/// Seeded downsampling of every present class to the smallest class count,
/// preserving input order.
std::vector<LabeledInstance> balance(std::span<const LabeledInstance> instances, std::uint64_t seed);

/// Per-class feature centres of the reference feature table.
struct ClassFeatureRow {
  double aspect_ratio;
  double min_r;
  double max_r;
  double displacement;
  double min_d;
  double max_d;
};

const std::array<ClassFeatureRow, kClassCount>& reference_feature_rows();

struct SynthSpec {
  int per_class = 500;
  double sigma_ear = 0.02;
  double sigma_disp = 1.5;
  std::uint64_t seed = 7;
};

/// Gaussian draws around each class row; extrema columns are jittered with
/// the same sigma and widened to bound the drawn values. Class-major order.
std::vector<LabeledInstance> synthesize(const SynthSpec& spec,
                                        const std::array<ClassFeatureRow, kClassCount>& rows = reference_feature_rows());

}  // namespace ocugaze
