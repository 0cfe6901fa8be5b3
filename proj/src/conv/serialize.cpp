#include "mdml/conv/serialize.hpp"

#include <cstring>

namespace mdml::conv {

const char* mlq_error_name(MlqError e) {
  switch (e) {
    case MlqError::None: return "none";
    case MlqError::BadMagic: return "bad magic";
    case MlqError::BadVersion: return "unsupported version";
    case MlqError::BadDtype: return "unknown dtype";
    case MlqError::BadActivation: return "unknown activation";
    case MlqError::BadShape: return "inconsistent shape";
    case MlqError::Truncated: return "truncated";
    case MlqError::TrailingBytes: return "trailing bytes";
  }
  return "none";
}

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(v & 0xff);
  out.push_back((v >> 8) & 0xff);
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(v & 0xff);
  out.push_back((v >> 8) & 0xff);
  out.push_back((v >> 16) & 0xff);
  out.push_back((v >> 24) & 0xff);
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

void put_header(std::vector<std::uint8_t>& out, std::uint8_t dtype, std::size_t layers) {
  out.push_back('M');
  out.push_back('L');
  out.push_back('Q');
  out.push_back('1');
  out.push_back(kMlqVersion);
  out.push_back(dtype);
  put_u16(out, static_cast<std::uint16_t>(layers));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  bool u8(std::uint8_t& v) {
    if (pos_ + 1 > bytes_.size()) return false;
    v = bytes_[pos_++];
    return true;
  }

  bool u16(std::uint16_t& v) {
    if (pos_ + 2 > bytes_.size()) return false;
    v = std::uint16_t(bytes_[pos_]) | std::uint16_t(bytes_[pos_ + 1]) << 8;
    pos_ += 2;
    return true;
  }

  bool u32(std::uint32_t& v) {
    if (pos_ + 4 > bytes_.size()) return false;
    v = std::uint32_t(bytes_[pos_]) | std::uint32_t(bytes_[pos_ + 1]) << 8 |
        std::uint32_t(bytes_[pos_ + 2]) << 16 | std::uint32_t(bytes_[pos_ + 3]) << 24;
    pos_ += 4;
    return true;
  }

  bool f32(float& v) {
    std::uint32_t bits;
    if (!u32(bits)) return false;
    std::memcpy(&v, &bits, 4);
    return true;
  }

  bool i8(std::int8_t& v) {
    std::uint8_t raw;
    if (!u8(raw)) return false;
    std::memcpy(&v, &raw, 1);
    return true;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

std::optional<MlqModel> fail(MlqError* error, std::string* message, MlqError code,
                             const std::string& detail) {
  if (error) *error = code;
  if (message) *message = detail;
  return std::nullopt;
}

}  // namespace

std::vector<std::uint8_t> save_mlq(const ml::MlpModel& model) {
  std::vector<std::uint8_t> out;
  put_header(out, kDtypeFloat32, model.layers.size());
  for (const auto& l : model.layers) {
    put_u32(out, l.in_dim);
    put_u32(out, l.out_dim);
    out.push_back(static_cast<std::uint8_t>(l.activation));
    for (float w : l.weights) put_f32(out, w);
    for (float b : l.biases) put_f32(out, b);
  }
  return out;
}

std::vector<std::uint8_t> save_mlq(const QuantizedMlpModel& model) {
  std::vector<std::uint8_t> out;
  put_header(out, kDtypeInt8, model.layers.size());
  for (const auto& l : model.layers) {
    put_u32(out, l.in_dim);
    put_u32(out, l.out_dim);
    out.push_back(static_cast<std::uint8_t>(l.activation));
    put_f32(out, l.scale);
    put_u32(out, static_cast<std::uint32_t>(l.zero_point));
    for (std::int8_t w : l.weights) out.push_back(static_cast<std::uint8_t>(w));
    for (float b : l.biases) put_f32(out, b);
  }
  return out;
}

std::optional<MlqModel> load_mlq(const std::vector<std::uint8_t>& bytes, MlqError* error,
                                 std::string* message) {
  if (error) *error = MlqError::None;
  Reader r(bytes);

  std::uint8_t magic[4];
  for (auto& b : magic)
    if (!r.u8(b)) return fail(error, message, MlqError::Truncated, "file shorter than the header");
  if (magic[0] != 'M' || magic[1] != 'L' || magic[2] != 'Q' || magic[3] != '1')
    return fail(error, message, MlqError::BadMagic, "missing MLQ1 magic");

  std::uint8_t version = 0, dtype = 0;
  std::uint16_t layer_count = 0;
  if (!r.u8(version) || !r.u8(dtype) || !r.u16(layer_count))
    return fail(error, message, MlqError::Truncated, "file shorter than the header");
  if (version != kMlqVersion)
    return fail(error, message, MlqError::BadVersion,
                "version " + std::to_string(version) + " is not supported");
  if (dtype != kDtypeFloat32 && dtype != kDtypeInt8)
    return fail(error, message, MlqError::BadDtype, "dtype " + std::to_string(dtype));
  if (layer_count == 0)
    return fail(error, message, MlqError::BadShape, "a model needs at least one layer");

  ml::MlpModel fmodel;
  QuantizedMlpModel qmodel;
  std::uint32_t prev_out = 0;

  for (std::uint16_t l = 0; l < layer_count; ++l) {
    std::uint32_t in_dim = 0, out_dim = 0;
    std::uint8_t act = 0;
    if (!r.u32(in_dim) || !r.u32(out_dim) || !r.u8(act))
      return fail(error, message, MlqError::Truncated,
                  "layer " + std::to_string(l + 1) + " header is truncated");
    if (in_dim == 0 || out_dim == 0)
      return fail(error, message, MlqError::BadShape,
                  "layer " + std::to_string(l + 1) + " has a zero dimension");
    if (l > 0 && in_dim != prev_out)
      return fail(error, message, MlqError::BadShape,
                  "layer " + std::to_string(l + 1) + " input does not match the previous output");
    if (act > 2)
      return fail(error, message, MlqError::BadActivation,
                  "layer " + std::to_string(l + 1) + " activation " + std::to_string(act));
    prev_out = out_dim;

    std::uint64_t count = std::uint64_t(in_dim) * out_dim;
    if (dtype == kDtypeFloat32) {
      ml::LayerT<float> layer;
      layer.in_dim = in_dim;
      layer.out_dim = out_dim;
      layer.activation = static_cast<ml::Activation>(act);
      layer.weights.resize(count);
      layer.biases.resize(out_dim);
      for (auto& w : layer.weights)
        if (!r.f32(w))
          return fail(error, message, MlqError::Truncated,
                      "layer " + std::to_string(l + 1) + " weights are truncated");
      for (auto& b : layer.biases)
        if (!r.f32(b))
          return fail(error, message, MlqError::Truncated,
                      "layer " + std::to_string(l + 1) + " biases are truncated");
      fmodel.layers.push_back(std::move(layer));
    } else {
      QuantizedLayer layer;
      layer.in_dim = in_dim;
      layer.out_dim = out_dim;
      layer.activation = static_cast<ml::Activation>(act);
      std::uint32_t zp = 0;
      if (!r.f32(layer.scale) || !r.u32(zp))
        return fail(error, message, MlqError::Truncated,
                    "layer " + std::to_string(l + 1) + " quantization header is truncated");
      layer.zero_point = static_cast<std::int32_t>(zp);
      layer.weights.resize(count);
      layer.biases.resize(out_dim);
      for (auto& w : layer.weights)
        if (!r.i8(w))
          return fail(error, message, MlqError::Truncated,
                      "layer " + std::to_string(l + 1) + " weights are truncated");
      for (auto& b : layer.biases)
        if (!r.f32(b))
          return fail(error, message, MlqError::Truncated,
                      "layer " + std::to_string(l + 1) + " biases are truncated");
      qmodel.layers.push_back(std::move(layer));
    }
  }

  if (r.remaining() > 0)
    return fail(error, message, MlqError::TrailingBytes,
                std::to_string(r.remaining()) + " bytes after the last layer");

  if (dtype == kDtypeFloat32) return MlqModel{std::move(fmodel)};
  return MlqModel{std::move(qmodel)};
}

namespace {

bool checked_add(std::uint64_t a, std::uint64_t b, std::uint64_t& out) {
  return !__builtin_add_overflow(a, b, &out);
}

bool checked_mul(std::uint64_t a, std::uint64_t b, std::uint64_t& out) {
  return !__builtin_mul_overflow(a, b, &out);
}

std::optional<std::uint64_t> size_bytes(const ml::MlpArchitecture& arch, bool quantized) {
  if (!arch.valid()) return std::nullopt;
  std::uint64_t total = 8;  // header
  for (std::size_t l = 0; l + 1 < arch.dims.size(); ++l) {
    std::uint64_t weights;
    if (!checked_mul(arch.dims[l], arch.dims[l + 1], weights)) return std::nullopt;
    std::uint64_t wbytes, bbytes;
    if (quantized) {
      wbytes = weights;
      if (!checked_add(wbytes, 8, wbytes)) return std::nullopt;  // scale + zero point
    } else {
      if (!checked_mul(weights, 4, wbytes)) return std::nullopt;
    }
    if (!checked_mul(arch.dims[l + 1], 4, bbytes)) return std::nullopt;
    if (!checked_add(total, 9, total)) return std::nullopt;  // layer header
    if (!checked_add(total, wbytes, total)) return std::nullopt;
    if (!checked_add(total, bbytes, total)) return std::nullopt;
  }
  return total;
}

}  // namespace

std::optional<std::uint64_t> float_size_bytes(const ml::MlpArchitecture& arch) {
  return size_bytes(arch, false);
}

std::optional<std::uint64_t> quantized_size_bytes(const ml::MlpArchitecture& arch) {
  return size_bytes(arch, true);
}

}  // namespace mdml::conv
