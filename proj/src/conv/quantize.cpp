#include "mdml/conv/quantize.hpp"

#include <cmath>

#include "mdml/ml/nn_math.hpp"

namespace mdml::conv {

ml::MlpArchitecture QuantizedMlpModel::architecture() const {
  ml::MlpArchitecture arch;
  if (layers.empty()) return arch;
  arch.dims.push_back(layers.front().in_dim);
  for (const auto& l : layers) {
    arch.dims.push_back(l.out_dim);
    arch.activations.push_back(l.activation);
  }
  return arch;
}

std::size_t QuantizedMlpModel::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.biases.size();
  return n;
}

std::optional<QuantizedMlpModel> quantize(const ml::MlpModel& model, std::string* error) {
  QuantizedMlpModel out;
  out.layers.reserve(model.layers.size());

  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& layer = model.layers[l];
    for (float w : layer.weights) {
      if (!std::isfinite(w)) {
        if (error) *error = "layer " + std::to_string(l + 1) + " has a non-finite weight";
        return std::nullopt;
      }
    }
    for (float b : layer.biases) {
      if (!std::isfinite(b)) {
        if (error) *error = "layer " + std::to_string(l + 1) + " has a non-finite bias";
        return std::nullopt;
      }
    }

    float lo = 0.0f, hi = 0.0f;
    if (!layer.weights.empty()) {
      lo = hi = layer.weights[0];
      for (float w : layer.weights) {
        if (w < lo) lo = w;
        if (w > hi) hi = w;
      }
    }

    QuantizedLayer q;
    q.in_dim = layer.in_dim;
    q.out_dim = layer.out_dim;
    q.activation = layer.activation;
    q.biases = layer.biases;

    double scale = hi > lo ? (double(hi) - double(lo)) / 255.0 : 1.0;
    long zp = std::lround(-128.0 - double(lo) / scale);
    if (zp < -128) zp = -128;
    if (zp > 127) zp = 127;
    q.scale = static_cast<float>(scale);
    q.zero_point = static_cast<std::int32_t>(zp);

    q.weights.reserve(layer.weights.size());
    for (float w : layer.weights) {
      long v = std::lround(double(w) / scale + double(zp));
      if (v < -128) v = -128;
      if (v > 127) v = 127;
      q.weights.push_back(static_cast<std::int8_t>(v));
    }
    out.layers.push_back(std::move(q));
  }
  return out;
}

ml::MlpModel dequantize(const QuantizedMlpModel& model) {
  ml::MlpModel out;
  out.layers.reserve(model.layers.size());
  for (const auto& q : model.layers) {
    ml::LayerT<float> l;
    l.in_dim = q.in_dim;
    l.out_dim = q.out_dim;
    l.activation = q.activation;
    l.biases = q.biases;
    l.weights.reserve(q.weights.size());
    for (std::size_t i = 0; i < q.weights.size(); ++i) l.weights.push_back(q.dequantized(i));
    out.layers.push_back(std::move(l));
  }
  return out;
}

std::optional<ml::Prediction> predict_quantized(const QuantizedMlpModel& model,
                                                const float* x, std::size_t n) {
  if (model.layers.empty() || model.layers.front().in_dim != n) return std::nullopt;

  std::vector<float> cur(x, x + n);
  std::vector<float> next;
  for (const auto& q : model.layers) {
    next.assign(q.out_dim, 0.0f);
    for (std::size_t o = 0; o < q.out_dim; ++o) {
      float acc = q.biases[o];
      const std::int8_t* row = q.weights.data() + o * q.in_dim;
      for (std::size_t i = 0; i < q.in_dim; ++i)
        acc += q.scale * (float(row[i]) - float(q.zero_point)) * cur[i];
      next[o] = ml::apply_activation(q.activation, acc);
    }
    cur.swap(next);
  }

  ml::Prediction pred;
  pred.scores = cur;
  pred.label = 0;
  for (std::size_t k = 1; k < cur.size(); ++k)
    if (cur[k] > cur[pred.label]) pred.label = int(k);
  return pred;
}

std::optional<ml::Prediction> predict_quantized(const QuantizedMlpModel& model,
                                                const std::vector<float>& x) {
  return predict_quantized(model, x.data(), x.size());
}

}  // namespace mdml::conv
