#include "ocugaze/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "ocugaze/error.hpp"

namespace ocugaze {

std::vector<int> ModelParams::hidden_sizes() const {
  std::vector<int> sizes;
  for (std::size_t i = 0; i + 1 < layers.size(); ++i) sizes.push_back(layers[i].rows);
  return sizes;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

void ModelParams::validate() const {
  if (layers.empty()) throw Error(ErrorKind::configuration, "model has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.rows <= 0 || l.cols <= 0 || l.weights.size() != static_cast<std::size_t>(l.rows) * l.cols ||
        l.bias.size() != static_cast<std::size_t>(l.rows)) {
      throw Error(ErrorKind::configuration, "layer " + std::to_string(i) + " has inconsistent shape");
    }
    if (i > 0 && layers[i - 1].rows != l.cols) {
      throw Error(ErrorKind::configuration, "layer " + std::to_string(i) + " expects " + std::to_string(l.cols) +
                                                " inputs but the previous layer emits " +
                                                std::to_string(layers[i - 1].rows));
    }
    const auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(l.weights.begin(), l.weights.end(), finite) ||
        !std::all_of(l.bias.begin(), l.bias.end(), finite)) {
      throw Error(ErrorKind::configuration, "layer " + std::to_string(i) + " holds non-finite values");
    }
  }
  if (output_size() != kClassCount) {
    throw Error(ErrorKind::configuration, "model must emit 9 class scores, emits " + std::to_string(output_size()));
  }
}

ModelParams zero_params(int input_size, std::span<const int> hidden_sizes, int output_size) {
  ModelParams p;
  int fan_in = input_size;
  auto add = [&](int rows) {
    if (rows <= 0) throw Error(ErrorKind::configuration, "layer sizes must be positive");
    DenseLayer l;
    l.rows = rows;
    l.cols = fan_in;
    l.weights.assign(static_cast<std::size_t>(rows) * fan_in, 0.0);
    l.bias.assign(static_cast<std::size_t>(rows), 0.0);
    p.layers.push_back(std::move(l));
    fan_in = rows;
  };
  if (input_size <= 0) throw Error(ErrorKind::configuration, "input size must be positive");
  for (int h : hidden_sizes) add(h);
  add(output_size);
  return p;
}

ModelParams he_init(int input_size, std::span<const int> hidden_sizes, std::uint64_t seed, int output_size) {
  ModelParams p = zero_params(input_size, hidden_sizes, output_size);
  std::mt19937_64 rng(seed);
  for (auto& l : p.layers) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / l.cols));
    for (auto& w : l.weights) w = dist(rng);
  }
  return p;
}

namespace {

void affine(const DenseLayer& l, std::span<const double> in, std::vector<double>& out) {
  out.resize(static_cast<std::size_t>(l.rows));
  for (int r = 0; r < l.rows; ++r) {
    const double* row = l.weights.data() + static_cast<std::size_t>(r) * l.cols;
    double acc = l.bias[static_cast<std::size_t>(r)];
    for (int c = 0; c < l.cols; ++c) acc += row[c] * in[static_cast<std::size_t>(c)];
    out[static_cast<std::size_t>(r)] = acc;
  }
}

void relu_inplace(std::vector<double>& v) {
  for (auto& x : v) x = std::max(0.0, x);
}

// Pre-activations of every layer for one input.
struct Trace {
  std::vector<std::vector<double>> z;
  std::vector<std::vector<double>> a;  // a[0] is the input
};

void check_input(const ModelParams& params, std::span<const double> x) {
  if (params.layers.empty()) throw Error(ErrorKind::configuration, "model has no layers");
  if (static_cast<int>(x.size()) != params.input_size()) {
    throw Error(ErrorKind::configuration, "input has " + std::to_string(x.size()) + " features, model expects " +
                                              std::to_string(params.input_size()));
  }
}

Trace forward_trace(const ModelParams& params, std::span<const double> x) {
  Trace t;
  t.a.emplace_back(x.begin(), x.end());
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    std::vector<double> z;
    affine(params.layers[i], t.a.back(), z);
    t.z.push_back(z);
    if (i + 1 < params.layers.size()) relu_inplace(z);
    t.a.push_back(std::move(z));
  }
  return t;
}

}  // namespace

Logits forward(const ModelParams& params, std::span<const double> x) {
  check_input(params, x);
  if (params.output_size() != kClassCount) throw Error(ErrorKind::configuration, "model must emit 9 scores");
  std::vector<double> cur(x.begin(), x.end());
  std::vector<double> next;
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    affine(params.layers[i], cur, next);
    if (i + 1 < params.layers.size()) relu_inplace(next);
    cur.swap(next);
  }
  Logits out{};
  std::copy(cur.begin(), cur.end(), out.begin());
  return out;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  if (logits.empty()) return {};
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double f : logits) sum += std::exp(f - m);
  const double log_sum = std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - m - log_sum;
  return out;
}

double nll_loss(std::span<const std::vector<double>> log_probs, std::span<const int> labels) {
  if (log_probs.empty()) throw Error(ErrorKind::parameter, "nll_loss needs a nonempty batch");
  if (log_probs.size() != labels.size()) throw Error(ErrorKind::parameter, "batch and label counts differ");
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 1 || static_cast<std::size_t>(y) > log_probs[i].size()) {
      throw Error(ErrorKind::parameter, "label " + std::to_string(y) + " out of range");
    }
    total -= log_probs[i][static_cast<std::size_t>(y - 1)];
  }
  return total / static_cast<double>(labels.size());
}

Gradients backward(const ModelParams& params, std::span<const Sample> batch) {
  if (batch.empty()) throw Error(ErrorKind::parameter, "backward needs a nonempty batch");
  Gradients g;
  g.d = params;
  for (auto& l : g.d.layers) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const std::size_t depth = params.layers.size();

  std::vector<double> delta;
  std::vector<double> prev_delta;
  for (const auto& sample : batch) {
    check_input(params, sample.x);
    if (sample.label < 1 || sample.label > params.output_size()) {
      throw Error(ErrorKind::parameter, "label " + std::to_string(sample.label) + " out of range");
    }
    const Trace t = forward_trace(params, sample.x);
    const auto lp = log_softmax(t.z.back());
    g.loss -= lp[static_cast<std::size_t>(sample.label - 1)] * inv_n;

    delta.resize(lp.size());
    for (std::size_t k = 0; k < lp.size(); ++k) delta[k] = std::exp(lp[k]);
    delta[static_cast<std::size_t>(sample.label - 1)] -= 1.0;

    for (std::size_t li = depth; li-- > 0;) {
      const auto& layer = params.layers[li];
      auto& grad = g.d.layers[li];
      const auto& input = t.a[li];
      for (int r = 0; r < layer.rows; ++r) {
        const double d = delta[static_cast<std::size_t>(r)] * inv_n;
        grad.bias[static_cast<std::size_t>(r)] += d;
        double* row = grad.weights.data() + static_cast<std::size_t>(r) * layer.cols;
        for (int c = 0; c < layer.cols; ++c) row[c] += d * input[static_cast<std::size_t>(c)];
      }
      if (li == 0) break;
      prev_delta.assign(static_cast<std::size_t>(layer.cols), 0.0);
      for (int r = 0; r < layer.rows; ++r) {
        const double d = delta[static_cast<std::size_t>(r)];
        const double* row = layer.weights.data() + static_cast<std::size_t>(r) * layer.cols;
        for (int c = 0; c < layer.cols; ++c) prev_delta[static_cast<std::size_t>(c)] += row[c] * d;
      }
      const auto& z_prev = t.z[li - 1];
      for (std::size_t c = 0; c < prev_delta.size(); ++c) {
        if (!(z_prev[c] > 0.0)) prev_delta[c] = 0.0;
      }
      delta.swap(prev_delta);
    }
  }
  return g;
}

FeatureNormalization FeatureNormalization::fit(std::span<const OcularFeatureVector> features) {
  FeatureNormalization n;
  if (features.empty()) return n;
  const double count = static_cast<double>(features.size());
  for (const auto& f : features) {
    const auto v = f.values();
    for (std::size_t k = 0; k < kFeatureCount; ++k) n.means[k] += v[k] / count;
  }
  std::array<double, kFeatureCount> var{};
  for (const auto& f : features) {
    const auto v = f.values();
    for (std::size_t k = 0; k < kFeatureCount; ++k) var[k] += (v[k] - n.means[k]) * (v[k] - n.means[k]) / count;
  }
  for (std::size_t k = 0; k < kFeatureCount; ++k) {
    const double sd = std::sqrt(var[k]);
    n.stdevs[k] = sd > 1e-12 ? sd : 1.0;
  }
  return n;
}

std::vector<double> FeatureNormalization::apply(const OcularFeatureVector& v) const {
  const auto raw = v.values();
  std::vector<double> out(kFeatureCount);
  for (std::size_t k = 0; k < kFeatureCount; ++k) out[k] = (raw[k] - means[k]) / stdevs[k];
  return out;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::parameter, "learning rate must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw Error(ErrorKind::parameter, "momentum must be in [0, 1)");
  if (batch_size < 1) throw Error(ErrorKind::parameter, "batch size must be at least 1");
  if (epochs < 1) throw Error(ErrorKind::parameter, "epochs must be at least 1");
  for (int h : hidden_sizes) {
    if (h <= 0) throw Error(ErrorKind::parameter, "hidden sizes must be positive");
  }
}

TrainResult train(std::span<const OcularFeatureVector> features, std::span<const GazeClass> labels,
                  const TrainConfig& config) {
  config.validate();
  if (features.empty()) throw Error(ErrorKind::parameter, "training set is empty");
  if (features.size() != labels.size()) throw Error(ErrorKind::parameter, "feature and label counts differ");
  for (const auto& f : features) {
    for (double v : f.values()) {
      if (!std::isfinite(v)) throw Error(ErrorKind::parameter, "training features must be finite");
    }
  }

  TrainResult result;
  result.model.normalization = FeatureNormalization::fit(features);
  result.model.params = he_init(static_cast<int>(kFeatureCount), config.hidden_sizes, config.seed);

  std::vector<Sample> samples;
  samples.reserve(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    samples.push_back({result.model.normalization.apply(features[i]), label(labels[i])});
  }

  auto& params = result.model.params;
  ModelParams velocity = zero_params(params.input_size(), config.hidden_sizes);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<Sample> batch;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(samples[order[i]]);
      const Gradients g = backward(params, batch);
      if (!std::isfinite(g.loss)) {
        throw Error(ErrorKind::diverged_training, "training loss became non-finite in epoch " + std::to_string(epoch + 1));
      }
      epoch_loss += g.loss * static_cast<double>(end - start);
      for (std::size_t li = 0; li < params.layers.size(); ++li) {
        auto& p = params.layers[li];
        auto& v = velocity.layers[li];
        const auto& d = g.d.layers[li];
        for (std::size_t k = 0; k < p.weights.size(); ++k) {
          v.weights[k] = config.momentum * v.weights[k] - config.learning_rate * d.weights[k];
          p.weights[k] += v.weights[k];
        }
        for (std::size_t k = 0; k < p.bias.size(); ++k) {
          v.bias[k] = config.momentum * v.bias[k] - config.learning_rate * d.bias[k];
          p.bias[k] += v.bias[k];
        }
      }
    }
    epoch_loss /= static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss)) {
      throw Error(ErrorKind::diverged_training, "training loss became non-finite in epoch " + std::to_string(epoch + 1));
    }
    result.loss_trace.push_back(epoch_loss);
  }
  return result;
}

Prediction predict_from_logits(const Logits& logits) {
  Prediction p;
  const auto best = std::max_element(logits.begin(), logits.end());  // first maximum = lowest label
  p.label = gaze_class(static_cast<int>(best - logits.begin()) + 1);
  const auto lp = log_softmax(logits);
  for (std::size_t k = 0; k < lp.size(); ++k) p.confidences[k] = std::exp(lp[k]);
  return p;
}

Prediction predict(const ModelParams& params, std::span<const double> x) {
  return predict_from_logits(forward(params, x));
}

Prediction predict(const Model& model, const OcularFeatureVector& features) {
  return predict(model.params, model.normalization.apply(features));
}

}  // namespace ocugaze
