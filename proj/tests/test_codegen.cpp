#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "mdml/codegen.hpp"
#include "mdml/conv/carray.hpp"
#include "mdml/conv/quantize.hpp"
#include "mdml/conv/serialize.hpp"
#include "mdml/linker.hpp"
#include "mdml/parser.hpp"
#include "mdml/printer.hpp"

using namespace mdml;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "cannot open ", path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::string fixture_path(const std::string& name) {
  return std::string(MDML_FIXTURE_DIR) + "/" + name;
}

LinkedModel link_fixture(const std::string& name) {
  std::vector<Diagnostic> diags;
  auto linked = resolve_imports(fixture_path(name), filesystem_loader(), diags);
  REQUIRE_MESSAGE(linked, "fixture ", name, " failed to link");
  REQUIRE(check_semantics(*linked).empty());
  return *linked;
}

// The three non-default targets reuse the tutorial PIM through composition.
LinkedModel tutorial_for_target(const std::string& target) {
  ParseResult pim = parse(read_file(fixture_path("tutorial_pim.mdml")), "tutorial_pim.mdml");
  REQUIRE(pim.ok());
  std::string overlay_src = "configuration Field {\n  @compiler \"" + target +
                            "\"\n  instance sensor : Sensor;\n}\n";
  ParseResult overlay = parse(overlay_src, "<overlay>");
  REQUIRE(overlay.ok());
  std::vector<Diagnostic> diags;
  auto linked = compose_psm(pim.model, overlay.model, diags);
  REQUIRE(linked);
  REQUIRE(check_semantics(*linked).empty());
  return *linked;
}

LinkedModel tutorial_linked(const std::string& target) {
  if (target == "python_java") return link_fixture("tutorial_psm.mdml");
  return tutorial_for_target(target);
}

codegen::GeneratedTree build_tree(const LinkedModel& model, const std::string& target = {}) {
  codegen::GenerateOptions opts;
  opts.configuration = "Field";
  opts.target = target;
  std::vector<Diagnostic> diags;
  auto tree = codegen::generate(model, opts, diags);
  for (const auto& d : diags) MESSAGE(d.node, ": ", d.message);
  REQUIRE(tree);
  return *tree;
}

const std::string kTargets[4] = {
    "python_java",
    "rpi_3b+_python",
    "rpi_3b+_python_quantized",
    "arduino_nano_33_ble_sense_cpp",
};

// State names are asserted by scanning every generated file for the
// STATE_NAMES marker and collecting the quoted strings on those lines.
std::set<std::string> state_names(const codegen::GeneratedTree& tree) {
  std::set<std::string> names;
  for (const auto& file : tree.files) {
    std::istringstream lines(file.bytes);
    std::string line;
    while (std::getline(lines, line)) {
      if (line.find("STATE_NAMES") == std::string::npos) continue;
      std::size_t pos = 0;
      while ((pos = line.find('"', pos)) != std::string::npos) {
        std::size_t end = line.find('"', pos + 1);
        if (end == std::string::npos) break;
        names.insert(line.substr(pos + 1, end - pos - 1));
        pos = end + 1;
      }
    }
  }
  return names;
}

}  // namespace

TEST_CASE("tutorial trees match the golden snapshots") {
  const bool regen = std::getenv("MDML_REGEN_GOLDEN") != nullptr;
  for (const std::string& target : kTargets) {
    CAPTURE(target);
    LinkedModel linked = tutorial_linked(target);
    codegen::GeneratedTree tree = build_tree(linked);
    fs::path root = fs::path(MDML_GOLDEN_DIR) / target;

    if (regen) {
      fs::remove_all(root);
      for (const auto& file : tree.files) {
        fs::path dest = root / file.path;
        fs::create_directories(dest.parent_path());
        std::ofstream(dest, std::ios::binary) << file.bytes;
      }
      continue;
    }

    std::set<std::string> on_disk;
    REQUIRE_MESSAGE(fs::exists(root), "golden snapshots missing; run with MDML_REGEN_GOLDEN=1");
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
      if (!entry.is_regular_file()) continue;
      on_disk.insert(fs::relative(entry.path(), root).generic_string());
    }
    std::set<std::string> generated;
    for (const auto& file : tree.files) generated.insert(file.path);
    CHECK(generated == on_disk);

    for (const auto& file : tree.files) {
      CAPTURE(file.path);
      fs::path golden = root / file.path;
      REQUIRE(fs::exists(golden));
      CHECK(file.bytes == read_file(golden));
    }
  }
}

TEST_CASE("generation is deterministic across independent links") {
  for (const std::string& target : kTargets) {
    CAPTURE(target);
    codegen::GeneratedTree a = build_tree(tutorial_linked(target));
    codegen::GeneratedTree b = build_tree(tutorial_linked(target));
    CHECK(a == b);
  }
}

TEST_CASE("state names extracted from generated code are target invariant") {
  std::set<std::string> expected{"Idle", "Watching"};
  for (const std::string& target : kTargets) {
    CAPTURE(target);
    CHECK(state_names(build_tree(tutorial_linked(target))) == expected);
  }
}

TEST_CASE("the rpi variants differ only in model handling") {
  codegen::GeneratedTree plain = build_tree(tutorial_linked("rpi_3b+_python"));
  codegen::GeneratedTree quant = build_tree(tutorial_linked("rpi_3b+_python_quantized"));

  std::set<std::string> plain_paths, quant_paths;
  for (const auto& f : plain.files) plain_paths.insert(f.path);
  for (const auto& f : quant.files) quant_paths.insert(f.path);
  CHECK(plain_paths == quant_paths);

  // statechart code byte-identical; conversion and loading sections differ
  CHECK(plain.find("src/sensor_state_machine.py")->bytes ==
        quant.find("src/sensor_state_machine.py")->bytes);
  CHECK(plain.find("src/predict.py")->bytes != quant.find("src/predict.py")->bytes);
  CHECK(plain.find("model/model.mlq")->bytes != quant.find("model/model.mlq")->bytes);

  auto dtype_of = [](const std::string& bytes) {
    std::vector<std::uint8_t> blob(bytes.begin(), bytes.end());
    auto model = conv::load_mlq(blob);
    REQUIRE(model);
    return std::holds_alternative<conv::QuantizedMlpModel>(*model);
  };
  CHECK(!dtype_of(plain.find("model/model.mlq")->bytes));
  CHECK(dtype_of(quant.find("model/model.mlq")->bytes));
}

TEST_CASE("the arduino tree embeds the quantized model as a parseable C array") {
  codegen::GeneratedTree tree = build_tree(tutorial_linked("arduino_nano_33_ble_sense_cpp"));

  const auto* carray = tree.find("model/model_data.cc");
  const auto* mlq = tree.find("model/model.mlq");
  REQUIRE(carray);
  REQUIRE(mlq);

  std::string symbol;
  std::string error;
  auto payload = conv::parse_carray(carray->bytes, &symbol, &error);
  REQUIRE_MESSAGE(payload, error);
  CHECK(symbol == "model_data");
  CHECK(std::string(payload->begin(), payload->end()) == mlq->bytes);

  const auto* sketch = tree.find("src/main.ino");
  REQUIRE(sketch);
  CHECK(sketch->bytes.find("void setup()") != std::string::npos);
  CHECK(sketch->bytes.find("void loop()") != std::string::npos);
  CHECK(sketch->bytes.find("switch (state)") != std::string::npos);
  CHECK(sketch->bytes.find("kTensorArenaSize = 36") != std::string::npos);  // 4 * (5 + 4)
}

TEST_CASE("exp-1 is refused for arduino while exp-2 generates") {
  LinkedModel exp1 = link_fixture("exp1_psm.mdml");
  codegen::GenerateOptions opts;
  opts.configuration = "Rig";
  std::vector<Diagnostic> diags;
  CHECK(!codegen::generate(exp1, opts, diags));
  REQUIRE(!diags.empty());
  CHECK(diags[0].node == "deployability");
  CHECK(diags[0].message.find("flash") != std::string::npos);
  CHECK(diags[0].message.find("1048576") != std::string::npos);
  CHECK(diags[0].message.find("1209245") != std::string::npos);

  LinkedModel exp2 = link_fixture("exp2_psm.mdml");
  diags.clear();
  auto tree = codegen::generate(exp2, opts, diags);
  REQUIRE(tree);
  const auto* carray = tree->find("model/model_data.cc");
  REQUIRE(carray);
  auto payload = conv::parse_carray(carray->bytes);
  REQUIRE(payload);
  ml::MlpArchitecture arch = ml::MlpArchitecture::dense({6120, 8, 2});
  CHECK(payload->size() == conv::quantized_size_bytes(arch).value());
}

TEST_CASE("an explicitly trained model is embedded verbatim") {
  LinkedModel linked = link_fixture("tutorial_psm.mdml");
  ml::MlpModel model = ml::init_model(ml::MlpArchitecture::dense({5, 4, 2}), 99);

  codegen::GenerateOptions opts;
  opts.configuration = "Field";
  opts.model = &model;
  std::vector<Diagnostic> diags;
  auto tree = codegen::generate(linked, opts, diags);
  REQUIRE(tree);
  auto bytes = conv::save_mlq(model);
  CHECK(tree->find("model/model.mlq")->bytes ==
        std::string(bytes.begin(), bytes.end()));

  ml::MlpModel wrong = ml::init_model(ml::MlpArchitecture::dense({6, 4, 2}), 99);
  opts.model = &wrong;
  diags.clear();
  CHECK(!codegen::generate(linked, opts, diags));
  REQUIRE(!diags.empty());
  CHECK(diags[0].message.find("expected input width 5") != std::string::npos);
}

TEST_CASE("the default embedded model is the deterministic init") {
  LinkedModel linked = link_fixture("tutorial_psm.mdml");
  codegen::GeneratedTree tree = build_tree(linked);
  // seed 7 from the fixture's model_algorithm hyperparameters
  auto expected = conv::save_mlq(ml::init_model(ml::MlpArchitecture::dense({5, 4, 2}), 7));
  CHECK(tree.find("model/model.mlq")->bytes ==
        std::string(expected.begin(), expected.end()));
}

TEST_CASE("the targets list mirrors the platform registry") {
  auto targets = codegen::list_targets();
  REQUIRE(targets.size() == 4);
  CHECK(targets[0].first == "arduino_nano_33_ble_sense_cpp");
  CHECK(targets[1].first == "python_java");
  CHECK(targets[2].first == "rpi_3b+_python");
  CHECK(targets[3].first == "rpi_3b+_python_quantized");

  auto registry = platform::builtin_registry();
  platform::PlatformProfile custom;
  custom.id = "esp32_cpp";
  custom.display_name = "ESP32 (C++)";
  registry.push_back(custom);
  auto extended = codegen::list_targets(registry);
  REQUIRE(extended.size() == 5);
  CHECK(extended[1].first == "esp32_cpp");
  CHECK(extended[1].second == "ESP32 (C++)");
}

TEST_CASE("only the training target requires a dataset") {
  const std::string pim_src = R"(thing Probe {
  property x : Double;
  data_analytics d {
    labels OFF
    features x
    sequential false
    timestamps OFF
    model_algorithm mlp(hidden_layer_sizes 4)
  }
}
)";
  ParseResult pim = parse(pim_src, "<pim>");
  REQUIRE(pim.ok());
  auto make = [&](const std::string& target) {
    ParseResult overlay = parse("configuration C {\n  @compiler \"" + target +
                                    "\"\n  instance p : Probe;\n}\n",
                                "<overlay>");
    REQUIRE(overlay.ok());
    std::vector<Diagnostic> diags;
    auto linked = compose_psm(pim.model, overlay.model, diags);
    REQUIRE(linked);
    return *linked;
  };

  codegen::GenerateOptions opts;
  opts.configuration = "C";
  std::vector<Diagnostic> diags;
  CHECK(!codegen::generate(make("python_java"), opts, diags));
  REQUIRE(!diags.empty());
  CHECK(diags[0].message.find("declares no dataset") != std::string::npos);

  diags.clear();
  CHECK(codegen::generate(make("rpi_3b+_python"), opts, diags));
  CHECK(diags.empty());
}

TEST_CASE("bad configurations and targets are rejected") {
  LinkedModel linked = link_fixture("tutorial_psm.mdml");
  std::vector<Diagnostic> diags;

  codegen::GenerateOptions opts;
  opts.configuration = "Nope";
  CHECK(!codegen::generate(linked, opts, diags));
  CHECK(diags[0].message == "unknown configuration 'Nope'");

  diags.clear();
  opts.configuration = "Field";
  opts.target = "esp8266";
  CHECK(!codegen::generate(linked, opts, diags));
  CHECK(diags[0].message.find("unknown compiler target 'esp8266'") != std::string::npos);
  CHECK(diags[0].message.find("python_java") != std::string::npos);

  // a configuration with no @compiler and no override
  ParseResult pim = parse("thing T {}\n", "<pim>");
  ParseResult overlay = parse("configuration C {\n  instance t : T;\n}\n", "<overlay>");
  REQUIRE(pim.ok());
  REQUIRE(overlay.ok());
  diags.clear();
  auto bare = compose_psm(pim.model, overlay.model, diags);
  REQUIRE(bare);
  codegen::GenerateOptions none;
  none.configuration = "C";
  diags.clear();
  CHECK(!codegen::generate(*bare, none, diags));
  CHECK(diags[0].message.find("no @compiler annotation") != std::string::npos);
}

TEST_CASE("a model without analytics still gets its statechart tree") {
  ParseResult pim = parse(R"(thing Blinker {
  message toggle();
  provided port ctl {
    receives toggle
  }
  statechart Led init Off {
    state Off {}
    state On {}
    transition Off -> On event ctl?toggle
    transition On -> Off event ctl?toggle
  }
}
)",
                          "<pim>");
  REQUIRE(pim.ok());
  ParseResult overlay = parse(
      "configuration C {\n  @compiler \"arduino_nano_33_ble_sense_cpp\"\n"
      "  instance led : Blinker;\n}\n",
      "<overlay>");
  REQUIRE(overlay.ok());
  std::vector<Diagnostic> diags;
  auto linked = compose_psm(pim.model, overlay.model, diags);
  REQUIRE(linked);

  codegen::GenerateOptions opts;
  opts.configuration = "C";
  auto tree = codegen::generate(*linked, opts, diags);
  REQUIRE(tree);
  CHECK(tree->find("src/main.ino"));
  CHECK(!tree->find("model/model.mlq"));
  CHECK(!tree->find("model/model_data.cc"));
  CHECK(tree->find("src/main.ino")->bytes.find("TensorFlowLite") == std::string::npos);
}

TEST_CASE("the manifest records the input hashes") {
  LinkedModel linked = link_fixture("tutorial_psm.mdml");
  codegen::GeneratedTree tree = build_tree(linked);
  const auto* manifest = tree.find("MANIFEST");
  REQUIRE(manifest);

  char expected[32];
  std::snprintf(expected, sizeof(expected), "%016llx",
                static_cast<unsigned long long>(codegen::fnv1a64(pretty_print(linked.merged))));
  CHECK(manifest->bytes.find("configuration Field\n") == 0);
  CHECK(manifest->bytes.find("target python_java\n") != std::string::npos);
  CHECK(manifest->bytes.find("input model fnv1a64:" + std::string(expected)) !=
        std::string::npos);
  CHECK(manifest->bytes.find("input model.mlq fnv1a64:") != std::string::npos);
}

TEST_CASE("write_tree lays files out under config and target") {
  LinkedModel linked = link_fixture("tutorial_psm.mdml");
  codegen::GeneratedTree tree = build_tree(linked);

  fs::path out = fs::temp_directory_path() / "mdml_codegen_test";
  fs::remove_all(out);
  std::string error;
  REQUIRE_MESSAGE(codegen::write_tree(tree, out.string(), &error), error);

  fs::path root = out / "Field" / "python_java";
  for (const auto& file : tree.files) {
    CAPTURE(file.path);
    CHECK(read_file(root / file.path) == file.bytes);
  }
  CHECK(!fs::exists(root / "MANIFEST.tmp"));
  fs::remove_all(out);
}

TEST_CASE("fnv1a64 matches the reference vectors") {
  CHECK(codegen::fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(codegen::fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(codegen::fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("render_template substitutes known keys and keeps unknown ones") {
  std::string out = codegen::render_template("a {{x}} b {{y}} {{x}}", {{"x", "1"}});
  CHECK(out == "a 1 b {{y}} 1");
  CHECK(codegen::render_template("no placeholders", {}) == "no placeholders");
  CHECK(codegen::render_template("dangling {{x", {{"x", "1"}}) == "dangling {{x");
}
