#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mdml/conv/quantize.hpp"
#include "mdml/ml/mlp.hpp"

namespace mdml::conv {

// Binary model container. Layout, all integers little-endian:
//   "MLQ1"  magic
//   u8      format version (1)
//   u8      dtype: 0 = float32, 1 = int8 affine
//   u16     layer count
// then per layer:
//   u32     in_dim
//   u32     out_dim
//   u8      activation: 0 relu, 1 sigmoid, 2 linear
//   float32 payload: weights row-major, then biases
//   int8 payload:    scale f32, zero_point i32, int8 weights, f32 biases

inline constexpr std::uint8_t kMlqVersion = 1;
inline constexpr std::uint8_t kDtypeFloat32 = 0;
inline constexpr std::uint8_t kDtypeInt8 = 1;

enum class MlqError {
  None,
  BadMagic,
  BadVersion,
  BadDtype,
  BadActivation,
  BadShape,
  Truncated,
  TrailingBytes,
};

const char* mlq_error_name(MlqError e);

using MlqModel = std::variant<ml::MlpModel, QuantizedMlpModel>;

std::vector<std::uint8_t> save_mlq(const ml::MlpModel& model);
std::vector<std::uint8_t> save_mlq(const QuantizedMlpModel& model);

std::optional<MlqModel> load_mlq(const std::vector<std::uint8_t>& bytes,
                                 MlqError* error = nullptr,
                                 std::string* message = nullptr);

// Serialized sizes straight from the architecture, without materializing a
// model. nullopt when the arithmetic would overflow.
std::optional<std::uint64_t> float_size_bytes(const ml::MlpArchitecture& arch);
std::optional<std::uint64_t> quantized_size_bytes(const ml::MlpArchitecture& arch);

}  // namespace mdml::conv
