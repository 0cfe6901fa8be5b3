#include <doctest.h>

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "mdml/conv/carray.hpp"
#include "mdml/conv/quantize.hpp"
#include "mdml/conv/serialize.hpp"
#include "mdml/ml/rng.hpp"

using namespace mdml::conv;
using mdml::ml::Activation;
using mdml::ml::MlpArchitecture;
using mdml::ml::MlpModel;
using mdml::ml::Rng;

namespace {

MlpModel random_model(Rng& rng) {
  std::size_t depth = 2 + rng.below(3);  // 2..4 dims -> 1..3 layers
  std::vector<std::uint32_t> dims;
  for (std::size_t i = 0; i < depth; ++i)
    dims.push_back(static_cast<std::uint32_t>(1 + rng.below(30)));
  MlpArchitecture arch;
  arch.dims = dims;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i)
    arch.activations.push_back(static_cast<Activation>(rng.below(3)));
  return init_model(arch, rng.next());
}

}  // namespace

TEST_CASE("float model survives a save and load round trip") {
  MlpModel model = init_model(MlpArchitecture::dense({3, 5, 2}), 7);
  std::vector<std::uint8_t> bytes = save_mlq(model);

  CHECK(bytes[0] == 'M');
  CHECK(bytes[1] == 'L');
  CHECK(bytes[2] == 'Q');
  CHECK(bytes[3] == '1');
  CHECK(bytes[4] == kMlqVersion);
  CHECK(bytes[5] == kDtypeFloat32);
  CHECK((bytes[6] | bytes[7] << 8) == 2);

  auto arch = model.architecture();
  REQUIRE(float_size_bytes(arch));
  CHECK(bytes.size() == *float_size_bytes(arch));

  MlqError err;
  auto loaded = load_mlq(bytes, &err);
  REQUIRE(loaded);
  REQUIRE(std::holds_alternative<MlpModel>(*loaded));
  CHECK(std::get<MlpModel>(*loaded) == model);
}

TEST_CASE("quantized model survives a save and load round trip") {
  MlpModel model = init_model(MlpArchitecture::dense({4, 6, 2}), 9);
  auto quant = quantize(model);
  REQUIRE(quant);

  std::vector<std::uint8_t> bytes = save_mlq(*quant);
  CHECK(bytes[5] == kDtypeInt8);
  auto arch = model.architecture();
  REQUIRE(quantized_size_bytes(arch));
  CHECK(bytes.size() == *quantized_size_bytes(arch));

  auto loaded = load_mlq(bytes);
  REQUIRE(loaded);
  REQUIRE(std::holds_alternative<QuantizedMlpModel>(*loaded));
  CHECK(std::get<QuantizedMlpModel>(*loaded) == *quant);
}

TEST_CASE("random models round trip in both dtypes") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    CAPTURE(trial);
    MlpModel model = random_model(rng);

    std::vector<std::uint8_t> fbytes = save_mlq(model);
    CHECK(fbytes.size() == *float_size_bytes(model.architecture()));
    auto floaded = load_mlq(fbytes);
    REQUIRE(floaded);
    CHECK(std::get<MlpModel>(*floaded) == model);

    auto quant = quantize(model);
    REQUIRE(quant);
    std::vector<std::uint8_t> qbytes = save_mlq(*quant);
    CHECK(qbytes.size() == *quantized_size_bytes(model.architecture()));
    auto qloaded = load_mlq(qbytes);
    REQUIRE(qloaded);
    CHECK(std::get<QuantizedMlpModel>(*qloaded) == *quant);
  }
}

TEST_CASE("serialized sizes follow the container arithmetic") {
  MlpArchitecture big = MlpArchitecture::dense({6120, 32, 2});
  CHECK(*float_size_bytes(big) == 783778);
  CHECK(*quantized_size_bytes(big) == 196082);
  CHECK(init_model(big, 1).param_count() == 195938);

  MlpArchitecture small = MlpArchitecture::dense({6120, 8, 2});
  CHECK(*float_size_bytes(small) == 195970);
  CHECK(*quantized_size_bytes(small) == 49058);
  CHECK(init_model(small, 1).param_count() == 48986);

  MlpArchitecture invalid;
  CHECK(!float_size_bytes(invalid));

  MlpArchitecture huge = MlpArchitecture::dense({4294967295u, 4294967295u, 2});
  CHECK(!float_size_bytes(huge));
}

TEST_CASE("load rejects corrupted containers with distinct errors") {
  std::vector<std::uint8_t> good = save_mlq(init_model(MlpArchitecture::dense({2, 3, 2}), 1));
  MlqError err;
  std::string msg;

  auto expect = [&](std::vector<std::uint8_t> bytes, MlqError want) {
    CHECK(!load_mlq(bytes, &err, &msg));
    CHECK(err == want);
    CHECK(!msg.empty());
  };

  expect({}, MlqError::Truncated);

  auto bad_magic = good;
  bad_magic[0] = 'X';
  expect(bad_magic, MlqError::BadMagic);

  auto bad_version = good;
  bad_version[4] = 9;
  expect(bad_version, MlqError::BadVersion);

  auto bad_dtype = good;
  bad_dtype[5] = 7;
  expect(bad_dtype, MlqError::BadDtype);

  auto no_layers = good;
  no_layers[6] = 0;
  no_layers[7] = 0;
  expect(no_layers, MlqError::BadShape);

  auto bad_act = good;
  bad_act[16] = 9;  // first layer activation byte
  expect(bad_act, MlqError::BadActivation);

  auto truncated = good;
  truncated.pop_back();
  expect(truncated, MlqError::Truncated);

  auto trailing = good;
  trailing.push_back(0);
  expect(trailing, MlqError::TrailingBytes);

  // Second layer header starts after 8 header + 9 + 4 * (2 * 3 + 3) bytes.
  auto mismatched = good;
  mismatched[8 + 9 + 36] = 7;
  expect(mismatched, MlqError::BadShape);
  CHECK(msg.find("does not match") != std::string::npos);

  std::set<std::string> names;
  for (auto e : {MlqError::BadMagic, MlqError::BadVersion, MlqError::BadDtype,
                 MlqError::BadActivation, MlqError::BadShape, MlqError::Truncated,
                 MlqError::TrailingBytes})
    names.insert(mlq_error_name(e));
  CHECK(names.size() == 7);
}

TEST_CASE("quantization matches the affine hand oracle") {
  MlpModel model;
  mdml::ml::LayerT<float> l;
  l.in_dim = 2;
  l.out_dim = 2;
  l.activation = Activation::Sigmoid;
  l.weights = {-1.0f, 0.0f, 0.273f, 1.55f};
  l.biases = {0.5f, -0.5f};
  model.layers.push_back(l);

  auto q = quantize(model);
  REQUIRE(q);
  const QuantizedLayer& ql = q->layers[0];
  CHECK(ql.scale == doctest::Approx(2.55 / 255.0));
  CHECK(ql.zero_point == -28);
  CHECK(ql.weights == std::vector<std::int8_t>{-128, -28, -1, 127});
  CHECK(ql.biases == l.biases);  // biases stay exact

  for (std::size_t i = 0; i < ql.weights.size(); ++i)
    CHECK(std::abs(l.weights[i] - ql.dequantized(i)) <= ql.scale / 2 + 1e-6f);
}

TEST_CASE("quantizing a constant tensor is safe") {
  MlpModel model;
  mdml::ml::LayerT<float> l;
  l.in_dim = 3;
  l.out_dim = 1;
  l.activation = Activation::Linear;
  l.weights = {0.0f, 0.0f, 0.0f};
  l.biases = {1.0f};
  model.layers.push_back(l);

  auto q = quantize(model);
  REQUIRE(q);
  CHECK(q->layers[0].scale == 1.0f);
  for (std::size_t i = 0; i < 3; ++i) CHECK(q->layers[0].dequantized(i) == 0.0f);
}

TEST_CASE("quantization reconstructs random weights within half a step") {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    CAPTURE(trial);
    MlpModel model = random_model(rng);
    auto q = quantize(model);
    REQUIRE(q);
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      const auto& ql = q->layers[l];
      for (std::size_t i = 0; i < ql.weights.size(); ++i) {
        float err = std::abs(model.layers[l].weights[i] - ql.dequantized(i));
        CHECK(err <= ql.scale / 2 + 1e-6f);
      }
    }
  }
}

TEST_CASE("quantize refuses non-finite weights and names the layer") {
  MlpModel model = init_model(MlpArchitecture::dense({2, 3, 2}), 4);
  model.layers[1].weights[0] = std::numeric_limits<float>::infinity();
  std::string err;
  CHECK(!quantize(model, &err));
  CHECK(err.find("layer 2") != std::string::npos);
  CHECK(err.find("non-finite") != std::string::npos);
}

TEST_CASE("quantized prediction agrees with the dequantized network") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    MlpModel model = random_model(rng);
    auto q = quantize(model);
    REQUIRE(q);
    MlpModel deq = dequantize(*q);

    std::vector<float> x(model.layers.front().in_dim);
    for (auto& v : x) v = static_cast<float>(rng.uniform(-2.0, 2.0));

    auto a = predict_quantized(*q, x);
    auto b = predict(deq, x);
    REQUIRE(a);
    REQUIRE(b);
    CHECK(a->label == b->label);
    for (std::size_t k = 0; k < a->scores.size(); ++k)
      CHECK(a->scores[k] == doctest::Approx(b->scores[k]).epsilon(1e-5));
  }

  MlpModel model = init_model(MlpArchitecture::dense({3, 2}), 1);
  auto q = quantize(model);
  CHECK(!predict_quantized(*q, std::vector<float>{1, 2}));
}

TEST_CASE("carray output matches the xxd layout") {
  std::vector<std::uint8_t> thirteen;
  for (int i = 0; i < 13; ++i) thirteen.push_back(static_cast<std::uint8_t>(i));
  CHECK(emit_carray(thirteen, "x") ==
        "unsigned char x[] = {\n"
        "  0x00, 0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07, 0x08, 0x09, 0x0a, 0x0b,\n"
        "  0x0c\n"
        "};\n"
        "unsigned int x_len = 13;\n");

  CHECK(emit_carray({}, "x") ==
        "unsigned char x[] = {\n"
        "};\n"
        "unsigned int x_len = 0;\n");

  CHECK(emit_carray({0xff}, "x") ==
        "unsigned char x[] = {\n"
        "  0xff\n"
        "};\n"
        "unsigned int x_len = 1;\n");

  std::vector<std::uint8_t> twelve(12, 0xab);
  CHECK(emit_carray(twelve, "x") ==
        "unsigned char x[] = {\n"
        "  0xab, 0xab, 0xab, 0xab, 0xab, 0xab, 0xab, 0xab, 0xab, 0xab, 0xab, 0xab\n"
        "};\n"
        "unsigned int x_len = 12;\n");
}

TEST_CASE("carray size arithmetic matches the emitter") {
  for (std::size_t n : {0u, 1u, 11u, 12u, 13u, 24u, 25u, 100u, 51000u}) {
    CAPTURE(n);
    std::vector<std::uint8_t> payload(n, 0x5a);
    CHECK(emit_carray(payload, "model_data").size() == carray_size_bytes(n, "model_data"));
    CHECK(emit_carray(payload, "m").size() == carray_size_bytes(n, "m"));
  }

  CHECK(carray_size_bytes(196082, "model_data") == 1209245);
  CHECK(carray_size_bytes(49058, "model_data") == 302596);
  CHECK(carray_size_bytes(51000, "model_data") == 314570);
}

TEST_CASE("carray parser inverts the emitter") {
  Rng rng(8);
  for (std::size_t n : {0u, 1u, 11u, 12u, 13u, 257u}) {
    CAPTURE(n);
    std::vector<std::uint8_t> payload;
    for (std::size_t i = 0; i < n; ++i)
      payload.push_back(static_cast<std::uint8_t>(rng.below(256)));

    std::string symbol;
    std::string err;
    auto back = parse_carray(emit_carray(payload, "model_data"), &symbol, &err);
    REQUIRE(back);
    CHECK(*back == payload);
    CHECK(symbol == "model_data");
  }

  // Whitespace is free-form.
  auto spaced = parse_carray(
      "unsigned char  w [ ] = {\n\n  0x01,\n\t0x02 , 0x03 };\nunsigned int w_len = 3 ;\n");
  REQUIRE(spaced);
  CHECK(*spaced == std::vector<std::uint8_t>{1, 2, 3});
}

TEST_CASE("carray parser reports structured errors") {
  std::string err;

  CHECK(!parse_carray("signed char x[] = {};", nullptr, &err));
  CHECK(err.find("expected 'unsigned char'") != std::string::npos);

  CHECK(!parse_carray("unsigned char x[] = {\n  0xzz\n};\nunsigned int x_len = 1;\n", nullptr,
                      &err));
  CHECK(err.find("line 2") != std::string::npos);
  CHECK(err.find("hex byte") != std::string::npos);

  CHECK(!parse_carray("unsigned char x[] = {\n  0x1ff\n};\nunsigned int x_len = 1;\n", nullptr,
                      &err));
  CHECK(err.find("out of range") != std::string::npos);

  CHECK(!parse_carray(
      "unsigned char x[] = {\n  0x01\n};\nunsigned int x_len = 5;\n", nullptr, &err));
  CHECK(err == "declared length 5 does not match 1 payload bytes");

  CHECK(!parse_carray(
      "unsigned char x[] = {\n  0x01\n};\nunsigned int y_len = 1;\n", nullptr, &err));
  CHECK(err.find("does not match array symbol") != std::string::npos);

  CHECK(!parse_carray(
      "unsigned char x[] = {\n  0x01\n};\nunsigned int x_len = 1;\njunk", nullptr, &err));
  CHECK(err.find("trailing") != std::string::npos);

  CHECK(!parse_carray("unsigned char x[] = {\n  0x01 0x02\n};\nunsigned int x_len = 2;\n",
                      nullptr, &err));
  CHECK(err.find("expected ',' or '}'") != std::string::npos);
}
