#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mdml/ml/mlp.hpp"

namespace mdml::conv {

struct QuantizedLayer {
  std::uint32_t in_dim = 0;
  std::uint32_t out_dim = 0;
  ml::Activation activation = ml::Activation::Linear;
  float scale = 1.0f;
  std::int32_t zero_point = 0;
  std::vector<std::int8_t> weights;  // out_dim x in_dim, row-major
  std::vector<float> biases;         // biases stay in float

  float dequantized(std::size_t index) const {
    return scale * (static_cast<float>(weights[index]) - static_cast<float>(zero_point));
  }

  bool operator==(const QuantizedLayer&) const = default;
};

struct QuantizedMlpModel {
  std::vector<QuantizedLayer> layers;

  ml::MlpArchitecture architecture() const;
  std::size_t param_count() const;

  bool operator==(const QuantizedMlpModel&) const = default;
};

// Per-tensor affine quantization of the weights; biases are kept in float.
// scale = (max - min) / 255 (1 when the tensor is constant) and the zero
// point is clamped to the int8 range, so any non-degenerate weight
// reconstructs to within scale / 2. Non-finite weights are an error naming
// the offending layer.
std::optional<QuantizedMlpModel> quantize(const ml::MlpModel& model,
                                          std::string* error = nullptr);

ml::MlpModel dequantize(const QuantizedMlpModel& model);

// Forward pass over the dequantized weights; nullopt on width mismatch.
std::optional<ml::Prediction> predict_quantized(const QuantizedMlpModel& model,
                                                const float* x, std::size_t n);
std::optional<ml::Prediction> predict_quantized(const QuantizedMlpModel& model,
                                                const std::vector<float>& x);

}  // namespace mdml::conv
