#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ocugaze/error.hpp"
#include "ocugaze/nn.hpp"

namespace ocugaze {

using nlohmann::json;

std::string serialize_model(const Model& model) {
  model.params.validate();
  json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["hidden_sizes"] = model.params.hidden_sizes();
  doc["normalization"] = {{"means", model.normalization.means}, {"stdevs", model.normalization.stdevs}};
  json layers = json::array();
  for (const auto& l : model.params.layers) {
    layers.push_back({{"rows", l.rows}, {"cols", l.cols}, {"weights", l.weights}, {"bias", l.bias}});
  }
  doc["layers"] = std::move(layers);
  return doc.dump(1) + "\n";
}

Model parse_model(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parse, std::string("model file: ") + e.what());
  }
  try {
    const int version = doc.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw Error(ErrorKind::parse, "model file: unsupported format_version " + std::to_string(version));
    }
    Model model;
    const auto& norm = doc.at("normalization");
    const auto means = norm.at("means").get<std::vector<double>>();
    const auto stdevs = norm.at("stdevs").get<std::vector<double>>();
    if (means.size() != kFeatureCount || stdevs.size() != kFeatureCount) {
      throw Error(ErrorKind::parse, "model file: normalization needs 6 means and 6 stdevs");
    }
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
      if (!(stdevs[k] > 0.0)) throw Error(ErrorKind::configuration, "model file: stdevs must be positive");
      model.normalization.means[k] = means[k];
      model.normalization.stdevs[k] = stdevs[k];
    }
    for (const auto& l : doc.at("layers")) {
      DenseLayer layer;
      layer.rows = l.at("rows").get<int>();
      layer.cols = l.at("cols").get<int>();
      layer.weights = l.at("weights").get<std::vector<double>>();
      layer.bias = l.at("bias").get<std::vector<double>>();
      model.params.layers.push_back(std::move(layer));
    }
    model.params.validate();
    if (model.params.input_size() != static_cast<int>(kFeatureCount)) {
      throw Error(ErrorKind::configuration, "model file: first layer must take 6 features");
    }
    if (model.params.hidden_sizes() != doc.at("hidden_sizes").get<std::vector<int>>()) {
      throw Error(ErrorKind::configuration, "model file: hidden_sizes disagree with the layer shapes");
    }
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("model file: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const Model& model) {
  const auto text = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write model file " + path.string());
  out << text;
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open model file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_model(buffer.str());
}

}  // namespace ocugaze
