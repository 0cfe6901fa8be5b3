#include "mdml/ml/mlp.hpp"

#include <cmath>

#include "mdml/ml/nn_math.hpp"
#include "mdml/ml/rng.hpp"

namespace mdml::ml {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Linear: return "linear";
  }
  return "?";
}

std::optional<Activation> activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::Relu;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "linear") return Activation::Linear;
  return std::nullopt;
}

bool MlpArchitecture::valid() const {
  if (dims.size() < 2) return false;
  if (activations.size() != dims.size() - 1) return false;
  for (auto d : dims)
    if (d == 0) return false;
  return true;
}

MlpArchitecture MlpArchitecture::dense(const std::vector<std::uint32_t>& dims,
                                       Activation hidden) {
  MlpArchitecture arch;
  arch.dims = dims;
  if (dims.size() >= 2) {
    arch.activations.assign(dims.size() - 2, hidden);
    arch.activations.push_back(Activation::Sigmoid);
  }
  return arch;
}

MlpModel init_model(const MlpArchitecture& arch, std::uint64_t seed) {
  MlpModel model;
  if (!arch.valid()) return model;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < arch.dims.size(); ++l) {
    LayerT<float> layer;
    layer.in_dim = arch.dims[l];
    layer.out_dim = arch.dims[l + 1];
    layer.activation = arch.activations[l];
    double bound = std::sqrt(6.0 / (double(layer.in_dim) + double(layer.out_dim)));
    layer.weights.resize(std::size_t(layer.in_dim) * layer.out_dim);
    for (auto& w : layer.weights) w = static_cast<float>(rng.uniform(-bound, bound));
    layer.biases.assign(layer.out_dim, 0.0f);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

std::optional<Prediction> predict(const MlpModel& model, const float* x, std::size_t n) {
  if (model.layers.empty() || n != model.layers.front().in_dim) return std::nullopt;
  std::vector<float> current(x, x + n);
  std::vector<float> next;
  for (const auto& layer : model.layers) {
    if (current.size() != layer.in_dim) return std::nullopt;
    next.resize(layer.out_dim);
    forward_layer(layer, current.data(), next.data());
    current.swap(next);
  }
  Prediction p;
  p.scores = std::move(current);
  p.label = 0;
  for (std::size_t k = 1; k < p.scores.size(); ++k)
    if (p.scores[k] > p.scores[p.label]) p.label = static_cast<int>(k);
  return p;
}

std::optional<Prediction> predict(const MlpModel& model, const std::vector<float>& x) {
  return predict(model, x.data(), x.size());
}

}  // namespace mdml::ml
