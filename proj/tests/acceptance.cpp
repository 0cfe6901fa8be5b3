// Acceptance gate for the toolchain: nine criteria, one PASS/FAIL line
// each, nonzero exit when any of them fails. Run via ctest or directly.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mdml/codegen.hpp"
#include "mdml/conv/carray.hpp"
#include "mdml/conv/quantize.hpp"
#include "mdml/conv/serialize.hpp"
#include "mdml/linker.hpp"
#include "mdml/ml/data.hpp"
#include "mdml/ml/metrics.hpp"
#include "mdml/ml/mlp.hpp"
#include "mdml/ml/nn_math.hpp"
#include "mdml/ml/rng.hpp"
#include "mdml/ml/train.hpp"
#include "mdml/parser.hpp"
#include "mdml/platform.hpp"
#include "mdml/printer.hpp"
#include "support/model_gen.hpp"

using namespace mdml;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    pass = false;
    if (!detail.empty()) detail += "; ";
    detail += why;
  }
  void note(const std::string& what) {
    if (pass && detail.empty()) detail = what;
  }
};

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

bool within(double value, double reference, double tolerance) {
  return std::abs(value - reference) <= tolerance * reference;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::string fixture_path(const std::string& name) {
  return std::string(MDML_FIXTURE_DIR) + "/" + name;
}

// ---- 1. size estimates ----

Outcome check_sizes() {
  Outcome o;
  auto t0 = std::chrono::steady_clock::now();
  auto big = platform::estimate_sizes(ml::MlpArchitecture::dense({6120, 32, 2}));
  auto small = platform::estimate_sizes(ml::MlpArchitecture::dense({6120, 8, 2}));
  auto t1 = std::chrono::steady_clock::now();
  double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

  if (!big || !small) {
    o.fail("estimate_sizes returned nothing");
    return o;
  }
  if (!within(double(big->float_bytes), 785e3, 0.03))
    o.fail("[6120,32,2] float " + std::to_string(big->float_bytes) + " B outside 785 KB +-3%");
  if (!within(double(big->quantized_bytes), 198e3, 0.08))
    o.fail("[6120,32,2] int8 " + std::to_string(big->quantized_bytes) + " B outside 198 KB +-8%");
  if (!within(double(small->float_bytes), 197e3, 0.03))
    o.fail("[6120,8,2] float " + std::to_string(small->float_bytes) + " B outside 197 KB +-3%");
  if (!within(double(small->quantized_bytes), 51e3, 0.08))
    o.fail("[6120,8,2] int8 " + std::to_string(small->quantized_bytes) + " B outside 51 KB +-8%");
  if (ms >= 1.0) o.fail("estimation took " + fmt(ms) + " ms, budget 1 ms");
  o.note("float " + std::to_string(big->float_bytes) + "/" + std::to_string(small->float_bytes) +
         " B, int8 " + std::to_string(big->quantized_bytes) + "/" +
         std::to_string(small->quantized_bytes) + " B in " + fmt(ms) + " ms");
  return o;
}

// ---- 2. hex dump expansion ----

Outcome check_carray_expansion() {
  Outcome o;
  for (std::size_t n : {std::size_t(51000), std::size_t(198000)}) {
    double ratio = double(conv::carray_size_bytes(n, "model_data")) / double(n);
    if (ratio < 6.0 || ratio > 6.2)
      o.fail("ratio " + fmt(ratio) + " at N=" + std::to_string(n) + " outside [6.0, 6.2]");
  }
  ml::Rng rng(7);
  std::vector<std::uint8_t> payload(51000);
  for (auto& b : payload) b = std::uint8_t(rng.below(256));
  std::string text = conv::emit_carray(payload, "model_data");
  if (text.size() != conv::carray_size_bytes(payload.size(), "model_data"))
    o.fail("closed-form size law disagrees with the emitted text");
  if (!within(double(text.size()), 316e3, 0.06))
    o.fail("dump of 51000 B is " + std::to_string(text.size()) + " B, outside 316 KB +-6%");
  o.note("51000 B -> " + std::to_string(text.size()) + " B, ratio " +
         fmt(double(text.size()) / 51000.0));
  return o;
}

// ---- 3. deployability decisions ----

Outcome check_deploy_decisions() {
  Outcome o;
  auto registry = platform::builtin_registry();
  const auto* arduino = platform::find_platform(registry, "arduino_nano_33_ble_sense_cpp");
  if (!arduino) {
    o.fail("arduino profile missing from the registry");
    return o;
  }
  auto exp1 = platform::estimate_sizes(ml::MlpArchitecture::dense({6120, 32, 2}));
  auto exp2 = platform::estimate_sizes(ml::MlpArchitecture::dense({6120, 8, 2}));
  auto d1 = platform::check_deployability(*exp1, *arduino, platform::DeployPolicy::PaperCompat);
  auto d2 = platform::check_deployability(*exp2, *arduino, platform::DeployPolicy::PaperCompat);
  if (d1.accepted) o.fail("[6120,32,2] was accepted, expected a rejection");
  if (!d2.accepted) o.fail("[6120,8,2] was rejected, expected an acceptance");
  o.note("[6120,32,2] rejected (margin " + std::to_string(d1.margin_bytes) +
         " B), [6120,8,2] accepted (margin " + std::to_string(d2.margin_bytes) + " B)");
  return o;
}

// ---- 4 + 5 share one training run on the synthetic dataset ----

struct SynthRun {
  std::string error;
  double seconds = 0.0;
  double accuracy = 0.0;
  ml::MlpModel model;
  ml::Dataset test;
};

const SynthRun& synth_run() {
  static SynthRun run = [] {
    SynthRun r;
    ml::Dataset data = ml::synth_hydraulic_dataset(1);
    auto split = ml::chronological_split(data, 0.8);
    if (!split) {
      r.error = "chronological_split failed";
      return r;
    }
    auto standardizer = ml::fit_standardizer(split->first);
    if (!standardizer) {
      r.error = "fit_standardizer failed";
      return r;
    }
    ml::transform(*standardizer, split->first);
    ml::transform(*standardizer, split->second);

    ml::TrainConfig cfg;
    cfg.learning_rate = 1e-3;  // default 1e-5 scaled x100 for the synthetic set
    auto t0 = std::chrono::steady_clock::now();
    auto result = ml::train(ml::MlpArchitecture::dense({6120, 8, 2}), split->first, cfg);
    auto t1 = std::chrono::steady_clock::now();
    r.seconds = std::chrono::duration<double>(t1 - t0).count();
    if (!result.history.error.empty()) {
      r.error = result.history.error;
      return r;
    }
    r.model = std::move(result.model);
    r.test = std::move(split->second);
    r.accuracy = ml::evaluate(r.model, r.test).accuracy;
    return r;
  }();
  return run;
}

Outcome check_training() {
  Outcome o;
  const SynthRun& run = synth_run();
  if (!run.error.empty()) {
    o.fail("training failed: " + run.error);
    return o;
  }
  if (run.accuracy < 0.90)
    o.fail("test accuracy " + fmt(run.accuracy) + " below 0.90");
  if (run.seconds >= 60.0)
    o.fail("training took " + fmt(run.seconds, 1) + " s, budget 60 s");

  // Early stopping: frozen weights make epoch 1 the best, so the run
  // stops at exactly best + patience.
  ml::Rng rng(21);
  ml::Dataset d;
  d.rows = 50;
  d.cols = 3;
  for (std::size_t i = 0; i < d.rows * d.cols; ++i)
    d.x.push_back(float(rng.uniform(-2.0, 5.0)));
  for (std::size_t i = 0; i < d.rows; ++i) d.y.push_back(int(i % 2));
  ml::TrainConfig frozen;
  frozen.learning_rate = 0.0;
  frozen.batch_size = 10;
  frozen.patience = 3;
  frozen.seed = 9;
  auto res = ml::train(ml::MlpArchitecture::dense({3, 4, 2}), d, frozen);
  if (res.history.stop_reason != "early_stopping" || res.history.stopped_epoch != 4)
    o.fail("early stopping stopped at epoch " + std::to_string(res.history.stopped_epoch) +
           " (" + res.history.stop_reason + "), expected 4 = best 1 + patience 3");

  o.note("accuracy " + fmt(run.accuracy) + " in " + fmt(run.seconds, 1) +
         " s; early stop at best + patience");
  return o;
}

Outcome check_quantization_fidelity() {
  Outcome o;
  const SynthRun& run = synth_run();
  if (!run.error.empty()) {
    o.fail("training failed: " + run.error);
    return o;
  }
  std::string error;
  auto q = conv::quantize(run.model, &error);
  if (!q) {
    o.fail("quantize failed: " + error);
    return o;
  }

  std::vector<int> actual, predicted;
  for (std::size_t i = 0; i < run.test.rows; ++i) {
    auto p = conv::predict_quantized(*q, run.test.row(i), run.test.cols);
    if (!p) {
      o.fail("quantized inference rejected a test row");
      return o;
    }
    actual.push_back(run.test.y[i]);
    predicted.push_back(p->label);
  }
  double qacc = ml::compute_metrics(actual, predicted).accuracy;
  if (std::abs(qacc - run.accuracy) > 0.02)
    o.fail("quantized accuracy " + fmt(qacc) + " vs float " + fmt(run.accuracy) +
           " differ by more than 2 points");

  double worst = 0.0;
  bool bounded = true;
  for (std::size_t l = 0; l < q->layers.size(); ++l) {
    const auto& ql = q->layers[l];
    const auto& fl = run.model.layers[l];
    for (std::size_t i = 0; i < fl.weights.size(); ++i) {
      double err = std::abs(double(fl.weights[i]) - double(ql.dequantized(i)));
      worst = std::max(worst, err / ql.scale);
      if (err > ql.scale / 2 + 1e-6f) bounded = false;
    }
  }
  if (!bounded) o.fail("a weight reconstructs outside scale/2");
  o.note("accuracy float " + fmt(run.accuracy) + " vs int8 " + fmt(qacc) +
         ", worst dequant error " + fmt(worst, 4) + " scale units");
  return o;
}

// ---- 6. numeric correctness ----

Outcome check_numerics() {
  Outcome o;
  using namespace mdml::ml;
  double worst_rel = 0.0;
  for (Activation hidden : {Activation::Relu, Activation::Sigmoid}) {
    auto arch = MlpArchitecture::dense({3, 4, 2}, hidden);
    NetworkT<double> net = cast_network<double>(init_model(arch, 11));
    std::vector<double> x{0.3, -0.7, 1.2};
    std::vector<double> target{1.0, 0.0};

    ForwardTrace<double> trace;
    forward(net, x.data(), trace);
    NetworkT<double> grads = zeros_like(net);
    backward(net, trace, target, grads);

    auto loss_at = [&] {
      ForwardTrace<double> t;
      forward(net, x.data(), t);
      return bce_loss(t.activations.back(), target);
    };
    const double eps = 1e-3;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      auto sweep = [&](std::vector<double>& params, const std::vector<double>& analytic) {
        for (std::size_t i = 0; i < params.size(); ++i) {
          double saved = params[i];
          params[i] = saved + eps;
          double lp = loss_at();
          params[i] = saved - eps;
          double lm = loss_at();
          params[i] = saved;
          double numeric = (lp - lm) / (2.0 * eps);
          double rel = std::abs(analytic[i] - numeric) /
                       std::max(1e-6, std::abs(analytic[i]) + std::abs(numeric));
          worst_rel = std::max(worst_rel, rel);
        }
      };
      sweep(net.layers[l].weights, grads.layers[l].weights);
      sweep(net.layers[l].biases, grads.layers[l].biases);
    }
  }
  char sci[32];
  std::snprintf(sci, sizeof(sci), "%.1e", worst_rel);
  if (worst_rel > 1e-4) o.fail(std::string("gradient relative error ") + sci + " above 1e-4");

  ml::Rng rng(5);
  ml::Dataset d;
  d.rows = 200;
  d.cols = 6;
  for (std::size_t i = 0; i < d.rows * d.cols; ++i)
    d.x.push_back(float(rng.uniform(-3.0, 9.0)));
  d.y.assign(d.rows, 0);
  auto s = ml::fit_standardizer(d);
  if (!s) {
    o.fail("fit_standardizer failed");
    return o;
  }
  ml::transform(*s, d);
  for (std::size_t j = 0; j < d.cols; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < d.rows; ++i) mean += d.row(i)[j];
    mean /= double(d.rows);
    double var = 0.0;
    for (std::size_t i = 0; i < d.rows; ++i) {
      double c = d.row(i)[j] - mean;
      var += c * c;
    }
    double sd = std::sqrt(var / double(d.rows));
    if (std::abs(mean) > 1e-6)
      o.fail("column " + std::to_string(j) + " mean " + fmt(mean, 8) + " above 1e-6");
    if (std::abs(sd - 1.0) > 1e-6)
      o.fail("column " + std::to_string(j) + " std " + fmt(sd, 8) + " off 1 by more than 1e-6");
  }
  o.note(std::string("worst gradient error ") + sci + "; standardized columns centered");
  return o;
}

// ---- 7. round trips ----

ml::MlpModel random_mlp(ml::Rng& rng) {
  std::vector<std::uint32_t> dims;
  std::size_t depth = 2 + rng.below(3);
  for (std::size_t i = 0; i < depth; ++i)
    dims.push_back(std::uint32_t(1 + rng.below(30)));
  ml::MlpArchitecture arch;
  arch.dims = dims;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i)
    arch.activations.push_back(static_cast<ml::Activation>(rng.below(3)));
  return ml::init_model(arch, rng.next());
}

Outcome check_round_trips() {
  Outcome o;
  std::size_t parse_fails = 0;
  for (std::uint64_t seed = 1; seed <= 500; ++seed) {
    testing::ModelGen gen(seed);
    SourceModel m = gen.model();
    ParseResult r = parse(pretty_print(m), "gen.mdml");
    if (!r.ok() || !(r.model == m)) ++parse_fails;
  }
  if (parse_fails) o.fail(std::to_string(parse_fails) + "/500 parse round trips failed");

  std::size_t save_fails = 0;
  ml::Rng rng(1234);
  for (int i = 0; i < 200; ++i) {
    ml::MlpModel model = random_mlp(rng);
    auto back = conv::load_mlq(conv::save_mlq(model));
    if (!back || !std::holds_alternative<ml::MlpModel>(*back) ||
        !(std::get<ml::MlpModel>(*back) == model))
      ++save_fails;
    auto q = conv::quantize(model);
    if (!q) {
      ++save_fails;
      continue;
    }
    auto qback = conv::load_mlq(conv::save_mlq(*q));
    if (!qback || !std::holds_alternative<conv::QuantizedMlpModel>(*qback) ||
        !(std::get<conv::QuantizedMlpModel>(*qback) == *q))
      ++save_fails;
  }
  if (save_fails) o.fail(std::to_string(save_fails) + "/200 model save round trips failed");

  std::size_t carray_fails = 0;
  std::vector<std::size_t> lengths{0, 1, 11, 12, 13};
  for (int i = 0; i < 40; ++i) lengths.push_back(rng.below(4096));
  for (std::size_t n : lengths) {
    std::vector<std::uint8_t> payload(n);
    for (auto& b : payload) b = std::uint8_t(rng.below(256));
    std::string symbol;
    auto back = conv::parse_carray(conv::emit_carray(payload, "blob"), &symbol);
    if (!back || *back != payload || symbol != "blob") ++carray_fails;
  }
  if (carray_fails)
    o.fail(std::to_string(carray_fails) + "/" + std::to_string(lengths.size()) +
           " carray round trips failed");
  o.note("500 parse, 200 model, " + std::to_string(lengths.size()) + " carray round trips");
  return o;
}

// ---- 8. pim/psm contract ----

SourceModel make_overlay(const SourceModel& pim) {
  SourceModel o;
  o.imports.push_back("pim.mdml");
  Configuration c;
  c.name = "Deploy";
  Annotation comp;
  comp.key = "compiler";
  comp.value = "python_java";
  c.annotations.push_back(comp);
  int i = 0;
  for (const auto& t : pim.things) {
    Instance inst;
    inst.name = "inst" + std::to_string(i++);
    inst.thing = t.name;
    c.instances.push_back(inst);
  }
  o.configurations.push_back(std::move(c));
  if (!pim.things.empty()) {
    Annotation a;
    a.key = "type_mapping";
    a.value = "short";
    a.target = pim.things.front().name;
    if (!pim.things.front().properties.empty())
      a.target += "." + pim.things.front().properties.front().name;
    o.annotations.push_back(std::move(a));
  }
  return o;
}

std::set<std::string> tree_state_names(const codegen::GeneratedTree& tree) {
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

std::optional<codegen::GeneratedTree> tutorial_tree(const std::string& target,
                                                    std::string* why) {
  ParseResult pim = parse(read_file(fixture_path("tutorial_pim.mdml")), "tutorial_pim.mdml");
  if (!pim.ok()) {
    *why = "tutorial pim failed to parse";
    return std::nullopt;
  }
  std::vector<Diagnostic> diags;
  std::optional<LinkedModel> linked;
  if (target == "python_java") {
    linked = resolve_imports(fixture_path("tutorial_psm.mdml"), filesystem_loader(), diags);
  } else {
    std::string overlay_src = "configuration Field {\n  @compiler \"" + target +
                              "\"\n  instance sensor : Sensor;\n}\n";
    ParseResult overlay = parse(overlay_src, "<overlay>");
    if (!overlay.ok()) {
      *why = "overlay failed to parse";
      return std::nullopt;
    }
    linked = compose_psm(pim.model, overlay.model, diags);
  }
  if (!linked) {
    *why = "linking failed for target " + target;
    return std::nullopt;
  }
  codegen::GenerateOptions opts;
  opts.configuration = "Field";
  diags.clear();
  auto tree = codegen::generate(*linked, opts, diags);
  if (!tree) {
    *why = "generation failed for target " + target;
    for (const auto& d : diags) *why += "; " + d.message;
    return std::nullopt;
  }
  return tree;
}

Outcome check_pim_psm_contract() {
  Outcome o;
  std::size_t strip_fails = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    testing::ModelGen gen(seed);
    SourceModel pim = gen.model();
    pim.configurations.clear();
    pim.imports.clear();
    // The generator may aim model-level annotations at invented node names;
    // composition validates targets, so point them at a real thing.
    for (auto& a : pim.annotations)
      if (!a.target.empty()) a.target = pim.things.front().name;
    SourceModel overlay = make_overlay(pim);
    std::vector<Diagnostic> diags;
    auto composed = compose_psm(pim, overlay, diags);
    if (!composed || !(strip(*composed) == pim)) ++strip_fails;
  }
  if (strip_fails)
    o.fail(std::to_string(strip_fails) + "/50 strip(compose) identities failed");

  std::string why;
  auto a = tutorial_tree("python_java", &why);
  auto b = tutorial_tree("arduino_nano_33_ble_sense_cpp", &why);
  if (!a || !b) {
    o.fail(why);
    return o;
  }
  auto na = tree_state_names(*a);
  auto nb = tree_state_names(*b);
  if (na != nb || na.empty())
    o.fail("state-name sets differ between two overlays of one base model");
  std::string names;
  for (const auto& n : na) names += (names.empty() ? "" : ", ") + n;
  o.note("strip recovers 50 generated bases; state names {" + names + "} on both overlays");
  return o;
}

// ---- 9. codegen determinism ----

Outcome check_codegen_determinism() {
  Outcome o;
  const std::string targets[4] = {"python_java", "rpi_3b+_python", "rpi_3b+_python_quantized",
                                  "arduino_nano_33_ble_sense_cpp"};
  for (const auto& target : targets) {
    std::string why;
    auto first = tutorial_tree(target, &why);
    auto second = tutorial_tree(target, &why);
    if (!first || !second) {
      o.fail(why);
      continue;
    }
    if (!(*first == *second)) o.fail("two runs differ for target " + target);

    fs::path golden = fs::path(MDML_GOLDEN_DIR) / target;
    std::set<std::string> golden_paths;
    for (const auto& entry : fs::recursive_directory_iterator(golden))
      if (entry.is_regular_file())
        golden_paths.insert(fs::relative(entry.path(), golden).generic_string());
    std::set<std::string> tree_paths;
    for (const auto& f : first->files) tree_paths.insert(f.path);
    if (golden_paths != tree_paths) {
      o.fail("snapshot file set differs for target " + target);
      continue;
    }
    for (const auto& f : first->files)
      if (read_file(golden / f.path) != f.bytes)
        o.fail("snapshot " + target + "/" + f.path + " differs");
  }
  o.note("byte-identical trees and snapshots for all four targets");
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*check)();
  };
  const Criterion criteria[] = {
      {"size reproduction", check_sizes},
      {"hex dump expansion", check_carray_expansion},
      {"deployability decisions", check_deploy_decisions},
      {"quantization fidelity", check_quantization_fidelity},
      {"training pipeline", check_training},
      {"numeric correctness", check_numerics},
      {"round trips", check_round_trips},
      {"pim/psm contract", check_pim_psm_contract},
      {"codegen determinism", check_codegen_determinism},
  };

  int failures = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    Outcome o = c.check();
    failures += !o.pass;
    std::printf("[%s] %d/9 %s%s%s\n", o.pass ? "PASS" : "FAIL", index, c.name,
                o.detail.empty() ? "" : ": ", o.detail.c_str());
    std::fflush(stdout);
  }
  if (failures) std::printf("%d of 9 criteria failed\n", failures);
  return failures ? 1 : 0;
}
