#pragma once

// Templated forward/backward kernels. Production code instantiates T = float;
// the gradient-check oracle instantiates T = double so finite differences have
// enough precision to compare against. Loops run in a fixed order so results
// are deterministic.

#include <cmath>
#include <cstddef>
#include <vector>

#include "mdml/ml/mlp.hpp"

namespace mdml::ml {

inline constexpr double kProbClamp = 1e-7;

template <typename T>
T apply_activation(Activation act, T z) {
  switch (act) {
    case Activation::Relu:
      return z > T(0) ? z : T(0);
    case Activation::Sigmoid:
      return T(1) / (T(1) + std::exp(-z));
    case Activation::Linear:
      return z;
  }
  return z;
}

// Derivative expressed through the post-activation value a = act(z).
template <typename T>
T activation_derivative(Activation act, T a) {
  switch (act) {
    case Activation::Relu:
      return a > T(0) ? T(1) : T(0);
    case Activation::Sigmoid:
      return a * (T(1) - a);
    case Activation::Linear:
      return T(1);
  }
  return T(1);
}

// y = W x + b, then activation. W is out x in row-major.
template <typename T>
void forward_layer(const LayerT<T>& layer, const T* x, T* out) {
  for (std::size_t o = 0; o < layer.out_dim; ++o) {
    T acc = layer.biases[o];
    const T* row = layer.weights.data() + o * layer.in_dim;
    for (std::size_t i = 0; i < layer.in_dim; ++i) acc += row[i] * x[i];
    out[o] = apply_activation(layer.activation, acc);
  }
}

// Post-activation values per layer; [0] is the input copy.
template <typename T>
struct ForwardTrace {
  std::vector<std::vector<T>> activations;
};

template <typename T>
void forward(const NetworkT<T>& net, const T* x, ForwardTrace<T>& trace) {
  trace.activations.assign(net.layers.size() + 1, {});
  trace.activations[0].assign(x, x + net.layers.front().in_dim);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    trace.activations[l + 1].resize(net.layers[l].out_dim);
    forward_layer(net.layers[l], trace.activations[l].data(),
                  trace.activations[l + 1].data());
  }
}

// Per-unit binary cross-entropy against a one-hot target, averaged over
// units, with symmetric probability clamping.
template <typename T>
T bce_loss(const std::vector<T>& scores, const std::vector<T>& target) {
  T loss = T(0);
  for (std::size_t k = 0; k < scores.size(); ++k) {
    T p = scores[k];
    if (p < T(kProbClamp)) p = T(kProbClamp);
    if (p > T(1) - T(kProbClamp)) p = T(1) - T(kProbClamp);
    loss += -(target[k] * std::log(p) + (T(1) - target[k]) * std::log(T(1) - p));
  }
  return loss / static_cast<T>(scores.size());
}

// dL/dp for the clamped per-unit BCE above; zero in the clamped regions,
// matching what finite differences of the clamped loss see.
template <typename T>
T bce_dloss_dp(T p, T t, std::size_t units) {
  if (p <= T(kProbClamp) || p >= T(1) - T(kProbClamp)) return T(0);
  return (p - t) / (p * (T(1) - p)) / static_cast<T>(units);
}

// Backprop for one sample; gradients are accumulated into `grads`, which must
// be shaped like `net` (zero-filled by the caller before a batch).
template <typename T>
void backward(const NetworkT<T>& net, const ForwardTrace<T>& trace,
              const std::vector<T>& target, NetworkT<T>& grads) {
  const std::size_t L = net.layers.size();
  const std::vector<T>& output = trace.activations[L];

  std::vector<T> delta(output.size());
  for (std::size_t k = 0; k < output.size(); ++k) {
    T dp = bce_dloss_dp(output[k], target[k], output.size());
    delta[k] = dp * activation_derivative(net.layers[L - 1].activation, output[k]);
  }

  for (std::size_t l = L; l-- > 0;) {
    const LayerT<T>& layer = net.layers[l];
    LayerT<T>& g = grads.layers[l];
    const std::vector<T>& input = trace.activations[l];

    for (std::size_t o = 0; o < layer.out_dim; ++o) {
      g.biases[o] += delta[o];
      T* grow = g.weights.data() + o * layer.in_dim;
      for (std::size_t i = 0; i < layer.in_dim; ++i) grow[i] += delta[o] * input[i];
    }

    if (l == 0) break;
    std::vector<T> prev(layer.in_dim, T(0));
    for (std::size_t i = 0; i < layer.in_dim; ++i) {
      T acc = T(0);
      for (std::size_t o = 0; o < layer.out_dim; ++o)
        acc += net.layers[l].weights[o * layer.in_dim + i] * delta[o];
      prev[i] = acc * activation_derivative(net.layers[l - 1].activation,
                                            trace.activations[l][i]);
    }
    delta = std::move(prev);
  }
}

template <typename T>
NetworkT<T> zeros_like(const NetworkT<T>& net) {
  NetworkT<T> out = net;
  for (auto& l : out.layers) {
    std::fill(l.weights.begin(), l.weights.end(), T(0));
    std::fill(l.biases.begin(), l.biases.end(), T(0));
  }
  return out;
}

template <typename To, typename From>
NetworkT<To> cast_network(const NetworkT<From>& net) {
  NetworkT<To> out;
  out.layers.reserve(net.layers.size());
  for (const auto& l : net.layers) {
    LayerT<To> nl;
    nl.in_dim = l.in_dim;
    nl.out_dim = l.out_dim;
    nl.activation = l.activation;
    nl.weights.assign(l.weights.begin(), l.weights.end());
    nl.biases.assign(l.biases.begin(), l.biases.end());
    out.layers.push_back(std::move(nl));
  }
  return out;
}

}  // namespace mdml::ml
