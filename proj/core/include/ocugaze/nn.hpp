#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ocugaze/ocular_features.hpp"

namespace ocugaze {

/// Fully connected layer y = W x + b, W stored row-major (rows = outputs).
struct DenseLayer {
  int rows = 0;
  int cols = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  double w(int r, int c) const { return weights[static_cast<std::size_t>(r) * cols + c]; }
  double& w(int r, int c) { return weights[static_cast<std::size_t>(r) * cols + c]; }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Affine layers with ReLU between consecutive layers, no activation after
/// the last one. The default architecture is 6 -> 32 -> 24 -> 16 -> 9.
struct ModelParams {
  std::vector<DenseLayer> layers;

  int input_size() const { return layers.empty() ? 0 : layers.front().cols; }
  int output_size() const { return layers.empty() ? 0 : layers.back().rows; }
  std::vector<int> hidden_sizes() const;
  std::size_t parameter_count() const;

  /// Throws Error(configuration) on broken shape chains, output size other
  /// than 9, or non-finite values.
  void validate() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Zero-filled parameters with the given layer sizes.
ModelParams zero_params(int input_size, std::span<const int> hidden_sizes, int output_size = kClassCount);

/// He initialization: W ~ N(0, 2 / fan_in), b = 0, drawn from a seeded mt19937_64.
ModelParams he_init(int input_size, std::span<const int> hidden_sizes, std::uint64_t seed,
                    int output_size = kClassCount);

using Logits = std::array<double, kClassCount>;

/// Throws Error(configuration) when x does not match the input size.
Logits forward(const ModelParams& params, std::span<const double> x);

/// f_k - m - log(sum_i exp(f_i - m)), m = max_i f_i. Works for any length.
std::vector<double> log_softmax(std::span<const double> logits);

/// Mean negated true-class log-probability. Labels are 1-based.
/// Throws Error(parameter) for an empty batch or out-of-range labels.
double nll_loss(std::span<const std::vector<double>> log_probs, std::span<const int> labels);

struct Sample {
  std::vector<double> x;  // normalized features
  int label = 1;          // 1..9
};

struct Gradients {
  ModelParams d;  // same shapes as the parameters
  double loss = 0.0;
};

/// Exact gradients of the mean NLL over `batch`. ReLU'(0) is taken as 0.
Gradients backward(const ModelParams& params, std::span<const Sample> batch);

/// Per-feature z-score constants, fitted on the training split only.
struct FeatureNormalization {
  std::array<double, kFeatureCount> means{};
  std::array<double, kFeatureCount> stdevs{1.0, 1.0, 1.0, 1.0, 1.0, 1.0};

  static FeatureNormalization fit(std::span<const OcularFeatureVector> features);
  std::vector<double> apply(const OcularFeatureVector& v) const;

  friend bool operator==(const FeatureNormalization&, const FeatureNormalization&) = default;
};

struct Model {
  ModelParams params;
  FeatureNormalization normalization;

  friend bool operator==(const Model&, const Model&) = default;
};

struct TrainConfig {
  std::vector<int> hidden_sizes{32, 24, 16};
  double learning_rate = 0.01;
  double momentum = 0.9;
  int batch_size = 32;
  int epochs = 100;
  std::uint64_t seed = 7;

  void validate() const;
};

struct TrainResult {
  Model model;
  std::vector<double> loss_trace;  // mean training loss per epoch
};

/// Minibatch SGD with momentum over a seeded per-epoch shuffle.
/// Throws Error(diverged_training) on a non-finite loss.
TrainResult train(std::span<const OcularFeatureVector> features, std::span<const GazeClass> labels,
                  const TrainConfig& config);

struct Prediction {
  GazeClass label = GazeClass::center;
  std::array<double, kClassCount> confidences{};
};

/// Argmax of the logits (lowest label wins ties) and softmax confidences.
Prediction predict_from_logits(const Logits& logits);
Prediction predict(const ModelParams& params, std::span<const double> x);
Prediction predict(const Model& model, const OcularFeatureVector& features);

// Model file: versioned JSON.
inline constexpr int kModelFormatVersion = 1;
std::string serialize_model(const Model& model);
/// Throws Error(parse) on malformed documents or unknown versions and
/// Error(configuration) on shape-chain violations.
Model parse_model(const std::string& text);
void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

}  // namespace ocugaze
