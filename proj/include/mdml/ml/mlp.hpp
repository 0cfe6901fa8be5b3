#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mdml::ml {

enum class Activation : std::uint8_t { Relu = 0, Sigmoid = 1, Linear = 2 };

const char* activation_name(Activation a);
std::optional<Activation> activation_from_name(const std::string& name);

struct MlpArchitecture {
  std::vector<std::uint32_t> dims;         // [d0, d1, ..., dL], d0 = input width
  std::vector<Activation> activations;     // one per non-input layer

  bool valid() const;
  std::size_t layer_count() const { return activations.size(); }

  // Hidden layers use `hidden`, output layer sigmoid.
  static MlpArchitecture dense(const std::vector<std::uint32_t>& dims,
                               Activation hidden = Activation::Relu);

  bool operator==(const MlpArchitecture&) const = default;
};

template <typename T>
struct LayerT {
  std::uint32_t in_dim = 0;
  std::uint32_t out_dim = 0;
  Activation activation = Activation::Linear;
  std::vector<T> weights;  // out_dim x in_dim, row-major
  std::vector<T> biases;   // out_dim

  bool operator==(const LayerT&) const = default;
};

template <typename T>
struct NetworkT {
  std::vector<LayerT<T>> layers;

  MlpArchitecture architecture() const {
    MlpArchitecture arch;
    if (layers.empty()) return arch;
    arch.dims.push_back(layers.front().in_dim);
    for (const auto& l : layers) {
      arch.dims.push_back(l.out_dim);
      arch.activations.push_back(l.activation);
    }
    return arch;
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.biases.size();
    return n;
  }

  bool operator==(const NetworkT&) const = default;
};

using MlpModel = NetworkT<float>;

// Deterministic init: weights uniform in ±sqrt(6/(in+out)), biases zero.
MlpModel init_model(const MlpArchitecture& arch, std::uint64_t seed);

struct Prediction {
  int label = 0;                // argmax of scores, ties to class 0
  std::vector<float> scores;    // raw outputs of the final layer
};

// Forward pass; nullopt on input width mismatch.
std::optional<Prediction> predict(const MlpModel& model, const float* x, std::size_t n);
std::optional<Prediction> predict(const MlpModel& model, const std::vector<float>& x);

}  // namespace mdml::ml
