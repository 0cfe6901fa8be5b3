// Python bindings over the toolchain library. The surface mirrors the CLI:
// string paths in, plain dicts and lists out, ValueError on bad input.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <sstream>

#include "mdml/codegen.hpp"
#include "mdml/conv/carray.hpp"
#include "mdml/conv/quantize.hpp"
#include "mdml/conv/serialize.hpp"
#include "mdml/linker.hpp"
#include "mdml/ml/data.hpp"
#include "mdml/ml/metrics.hpp"
#include "mdml/ml/train.hpp"
#include "mdml/parser.hpp"
#include "mdml/platform.hpp"
#include "mdml/printer.hpp"
#include "mdml/simulate.hpp"

namespace py = pybind11;

namespace {

std::string read_file_or_throw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw py::value_error("cannot read '" + path + "'");
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file_or_throw(const std::string& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw py::value_error("cannot write '" + path + "'");
}

py::dict diag_dict(const mdml::Diagnostic& d) {
  py::dict out;
  out["severity"] = mdml::severity_name(d.severity);
  out["node"] = d.node;
  out["message"] = d.message;
  out["file"] = d.location.file;
  out["line"] = d.location.line;
  out["column"] = d.location.column;
  out["text"] = d.to_string();
  return out;
}

py::list diag_list(const std::vector<mdml::Diagnostic>& diags) {
  py::list out;
  for (const auto& d : diags) out.append(diag_dict(d));
  return out;
}

[[noreturn]] void throw_diags(const std::vector<mdml::Diagnostic>& diags) {
  std::ostringstream out;
  for (std::size_t i = 0; i < diags.size(); ++i) {
    if (i) out << "\n";
    out << diags[i].to_string();
  }
  throw py::value_error(out.str());
}

mdml::LinkedModel link_or_throw(const std::string& path) {
  std::vector<mdml::Diagnostic> diags;
  auto linked = mdml::resolve_imports(path, mdml::filesystem_loader(), diags);
  if (!linked) throw_diags(diags);
  return std::move(*linked);
}

mdml::ml::MlpArchitecture arch_of(const std::vector<std::uint32_t>& dims) {
  auto arch = mdml::ml::MlpArchitecture::dense(dims);
  if (!arch.valid()) throw py::value_error("invalid architecture");
  return arch;
}

py::dict size_dict(const mdml::platform::SizeReport& s) {
  py::dict out;
  out["param_count"] = s.param_count;
  out["float_bytes"] = s.float_bytes;
  out["quantized_bytes"] = s.quantized_bytes;
  out["carray_bytes"] = s.carray_bytes;
  out["arena_bytes"] = s.arena_bytes;
  out["expansion_ratio"] = s.expansion_ratio;
  return out;
}

py::dict metrics_dict(const mdml::ml::Metrics& m) {
  py::dict out;
  out["accuracy"] = m.accuracy;
  out["precision"] = m.precision;
  out["recall"] = m.recall;
  out["averaging"] = mdml::ml::averaging_name(m.averaging);
  py::list confusion;
  for (int r = 0; r < 2; ++r) {
    py::list row;
    for (int c = 0; c < 2; ++c) row.append(m.confusion[r][c]);
    confusion.append(row);
  }
  out["confusion"] = confusion;
  return out;
}

py::list check_model(const std::string& path) {
  auto linked = link_or_throw(path);
  return diag_list(mdml::check_semantics(linked));
}

std::string format_model(const std::string& text, const std::string& file) {
  auto parsed = mdml::parse(text, file);
  if (!parsed.ok()) throw_diags(parsed.diagnostics());
  return mdml::pretty_print(parsed.model);
}

std::string link_model(const std::string& path) {
  return mdml::pretty_print(link_or_throw(path).merged);
}

py::dict simulate(const std::string& path, const std::string& thing_name,
                  const std::vector<std::tuple<std::string, std::string, py::list>>& events) {
  auto linked = link_or_throw(path);
  const mdml::Thing* thing = nullptr;
  if (!thing_name.empty()) {
    thing = linked.merged.find_thing(thing_name);
    if (!thing) throw py::value_error("thing '" + thing_name + "' not found");
  } else if (linked.merged.things.size() == 1) {
    thing = &linked.merged.things.front();
  } else {
    throw py::value_error("pass a thing name to pick one of " +
                          std::to_string(linked.merged.things.size()) + " things");
  }

  std::vector<mdml::Event> evs;
  for (const auto& [port, message, args] : events) {
    mdml::Event ev;
    ev.port = port;
    ev.message = message;
    for (const auto& a : args) {
      if (py::isinstance<py::bool_>(a)) ev.args.push_back(mdml::Value{a.cast<bool>()});
      else if (py::isinstance<py::int_>(a)) ev.args.push_back(mdml::Value{a.cast<std::int64_t>()});
      else if (py::isinstance<py::float_>(a)) ev.args.push_back(mdml::Value{a.cast<double>()});
      else ev.args.push_back(mdml::Value{a.cast<std::string>()});
    }
    evs.push_back(std::move(ev));
  }

  auto result = mdml::simulate_statechart(*thing, evs);
  py::dict out;
  out["ok"] = result.ok();
  out["states"] = result.trace.states;
  py::list emitted;
  for (const auto& m : result.trace.emitted) emitted.append(m.to_string());
  out["emitted"] = emitted;
  out["steps"] = result.trace.steps;
  out["diagnostics"] = diag_list(result.errors);
  return out;
}

py::dict estimate(const std::vector<std::uint32_t>& dims) {
  auto sizes = mdml::platform::estimate_sizes(arch_of(dims));
  if (!sizes) throw py::value_error("invalid architecture");
  return size_dict(*sizes);
}

py::dict deployability(const std::vector<std::uint32_t>& dims, const std::string& platform,
                       const std::string& policy) {
  auto registry = mdml::platform::builtin_registry();
  const auto* profile = mdml::platform::find_platform(registry, platform);
  if (!profile) throw py::value_error("unknown platform '" + platform + "'");
  auto sizes = mdml::platform::estimate_sizes(arch_of(dims));
  if (!sizes) throw py::value_error("invalid architecture");
  auto p = policy == "strict" ? mdml::platform::DeployPolicy::Strict
                              : mdml::platform::DeployPolicy::PaperCompat;
  auto decision = mdml::platform::check_deployability(*sizes, *profile, p);
  py::dict out = size_dict(*sizes);
  out["platform"] = profile->id;
  out["accepted"] = decision.accepted;
  out["binding_constraint"] = decision.binding_constraint;
  out["margin_bytes"] = decision.margin_bytes;
  return out;
}

py::dict train(const std::string& psm_path, const std::string& csv_path,
               const std::string& out_path, py::object seed) {
  auto linked = link_or_throw(psm_path);
  auto diags = mdml::check_semantics(linked);
  if (mdml::has_errors(diags)) throw_diags(diags);

  const mdml::Thing* thing = nullptr;
  for (const auto& t : linked.merged.things)
    if (t.analytics) { thing = &t; break; }
  if (!thing) throw py::value_error("no thing declares a data_analytics block");

  std::string error;
  auto plan = mdml::training_plan(*thing, &error);
  if (!plan) throw py::value_error(error);

  auto data = mdml::ml::load_csv(csv_path, &error);
  if (!data) throw py::value_error(error);
  if (data->cols != plan->input_width)
    throw py::value_error("dataset has " + std::to_string(data->cols) +
                          " feature columns, expected " + std::to_string(plan->input_width));
  auto split = mdml::ml::chronological_split(*data, 0.8);
  if (!split) throw py::value_error("not enough rows for an 80/20 split");
  auto standardizer = mdml::ml::fit_standardizer(split->first);
  if (!standardizer) throw py::value_error("cannot fit a standardizer");
  mdml::ml::transform(*standardizer, split->first);
  mdml::ml::transform(*standardizer, split->second);

  std::vector<std::uint32_t> dims{plan->input_width};
  dims.insert(dims.end(), plan->hidden_layers.begin(), plan->hidden_layers.end());
  dims.push_back(2);
  mdml::ml::TrainConfig cfg = plan->config;
  if (!seed.is_none()) cfg.seed = seed.cast<std::uint64_t>();

  auto result = mdml::ml::train(mdml::ml::MlpArchitecture::dense(dims, plan->hidden_activation),
                                split->first, cfg);
  if (!result.history.error.empty()) throw py::value_error(result.history.error);

  auto metrics = mdml::ml::evaluate(result.model, split->second);
  auto bytes = mdml::conv::save_mlq(result.model);
  write_file_or_throw(out_path, bytes.data(), bytes.size());
  std::string std_json = mdml::ml::standardizer_to_json(*standardizer);
  write_file_or_throw(out_path + ".standardizer.json", std_json.data(), std_json.size());

  py::dict out = metrics_dict(metrics);
  out["thing"] = thing->name;
  out["architecture"] = dims;
  out["seed"] = cfg.seed;
  out["train_rows"] = split->first.rows;
  out["test_rows"] = split->second.rows;
  out["stopped_epoch"] = result.history.stopped_epoch;
  out["stop_reason"] = result.history.stop_reason;
  return out;
}

py::dict predict_file(const std::string& mlq_path, const std::string& csv_path,
                      const std::string& standardizer_path) {
  std::string text = read_file_or_throw(mlq_path);
  std::string message;
  auto loaded = mdml::conv::load_mlq(std::vector<std::uint8_t>(text.begin(), text.end()),
                                     nullptr, &message);
  if (!loaded) throw py::value_error(mlq_path + ": " + message);

  std::string error;
  auto data = mdml::ml::load_csv(csv_path, &error);
  if (!data) throw py::value_error(error);
  if (!standardizer_path.empty()) {
    auto std = mdml::ml::standardizer_from_json(read_file_or_throw(standardizer_path));
    if (!std || std->mean.size() != data->cols)
      throw py::value_error("standardizer does not match the dataset");
    mdml::ml::transform(*std, *data);
  }

  std::vector<int> actual, predicted;
  for (std::size_t i = 0; i < data->rows; ++i) {
    auto p = std::holds_alternative<mdml::conv::QuantizedMlpModel>(*loaded)
                 ? mdml::conv::predict_quantized(
                       std::get<mdml::conv::QuantizedMlpModel>(*loaded), data->row(i), data->cols)
                 : mdml::ml::predict(std::get<mdml::ml::MlpModel>(*loaded), data->row(i),
                                     data->cols);
    if (!p) throw py::value_error("row width does not match the model input");
    actual.push_back(data->y[i]);
    predicted.push_back(p->label);
  }
  py::dict out = metrics_dict(mdml::ml::compute_metrics(actual, predicted));
  out["predictions"] = predicted;
  return out;
}

py::dict model_info(const std::string& mlq_path) {
  std::string text = read_file_or_throw(mlq_path);
  std::string message;
  auto loaded = mdml::conv::load_mlq(std::vector<std::uint8_t>(text.begin(), text.end()),
                                     nullptr, &message);
  if (!loaded) throw py::value_error(mlq_path + ": " + message);
  py::dict out;
  if (std::holds_alternative<mdml::ml::MlpModel>(*loaded)) {
    const auto& model = std::get<mdml::ml::MlpModel>(*loaded);
    out["dtype"] = "float32";
    out["dims"] = model.architecture().dims;
    out["param_count"] = model.param_count();
  } else {
    const auto& model = std::get<mdml::conv::QuantizedMlpModel>(*loaded);
    out["dtype"] = "int8";
    out["dims"] = model.architecture().dims;
    out["param_count"] = model.param_count();
  }
  out["bytes"] = text.size();
  return out;
}

void quantize_file(const std::string& in_path, const std::string& out_path) {
  std::string text = read_file_or_throw(in_path);
  std::string message;
  auto loaded = mdml::conv::load_mlq(std::vector<std::uint8_t>(text.begin(), text.end()),
                                     nullptr, &message);
  if (!loaded) throw py::value_error(in_path + ": " + message);
  if (!std::holds_alternative<mdml::ml::MlpModel>(*loaded))
    throw py::value_error(in_path + ": the model is already quantized");
  std::string error;
  auto q = mdml::conv::quantize(std::get<mdml::ml::MlpModel>(*loaded), &error);
  if (!q) throw py::value_error(error);
  auto bytes = mdml::conv::save_mlq(*q);
  write_file_or_throw(out_path, bytes.data(), bytes.size());
}

std::string carray(const std::string& mlq_path, const std::string& symbol) {
  std::string text = read_file_or_throw(mlq_path);
  return mdml::conv::emit_carray(std::vector<std::uint8_t>(text.begin(), text.end()), symbol);
}

py::dict synth_dataset(std::uint64_t seed, std::size_t n, const std::string& out_path) {
  auto data = mdml::ml::synth_hydraulic_dataset(seed, n);
  std::string error;
  if (!mdml::ml::save_csv(data, out_path, &error)) throw py::value_error(error);
  py::dict out;
  out["rows"] = data.rows;
  out["cols"] = data.cols;
  std::size_t negatives = 0;
  for (int y : data.y) negatives += y == 0;
  out["class_0"] = negatives;
  out["class_1"] = data.rows - negatives;
  return out;
}

std::vector<std::string> generate(const std::string& psm_path, const std::string& out_dir,
                                  const std::string& config, const std::string& target,
                                  const std::string& model_path) {
  auto linked = link_or_throw(psm_path);
  auto diags = mdml::check_semantics(linked);
  if (mdml::has_errors(diags)) throw_diags(diags);

  mdml::ml::MlpModel trained;
  mdml::codegen::GenerateOptions opts;
  opts.configuration = config;
  opts.target = target;
  if (!model_path.empty()) {
    std::string text = read_file_or_throw(model_path);
    std::string message;
    auto loaded = mdml::conv::load_mlq(std::vector<std::uint8_t>(text.begin(), text.end()),
                                       nullptr, &message);
    if (!loaded) throw py::value_error(model_path + ": " + message);
    if (!std::holds_alternative<mdml::ml::MlpModel>(*loaded))
      throw py::value_error(model_path + ": pass the float model");
    trained = std::get<mdml::ml::MlpModel>(*loaded);
    opts.model = &trained;
  }

  diags.clear();
  auto tree = mdml::codegen::generate(linked, opts, diags);
  if (!tree) throw_diags(diags);
  std::string error;
  if (!mdml::codegen::write_tree(*tree, out_dir, &error)) throw py::value_error(error);

  std::vector<std::string> paths;
  for (const auto& f : tree->files)
    paths.push_back(tree->configuration + "/" + tree->target + "/" + f.path);
  return paths;
}

py::list list_targets() {
  py::list out;
  for (const auto& [id, name] : mdml::codegen::list_targets())
    out.append(py::make_tuple(id, name));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "native core of the mdml toolchain";

  m.def("check_model", &check_model, py::arg("path"),
        "Parse, link and validate a model; returns semantic diagnostics.");
  m.def("format_model", &format_model, py::arg("text"), py::arg("file") = "<memory>",
        "Parse source text and pretty-print it back.");
  m.def("link_model", &link_model, py::arg("path"),
        "Resolve imports and return the merged model source.");
  m.def("simulate", &simulate, py::arg("path"), py::arg("thing") = "",
        py::arg("events") = std::vector<std::tuple<std::string, std::string, py::list>>{},
        "Run a statechart over (port, message, args) events.");
  m.def("estimate", &estimate, py::arg("dims"), "Size report for a dense architecture.");
  m.def("deployability", &deployability, py::arg("dims"), py::arg("platform"),
        py::arg("policy") = "paper", "Size report plus a deployability decision.");
  m.def("train", &train, py::arg("model_path"), py::arg("data"), py::arg("out"),
        py::arg("seed") = py::none(),
        "Train the analytics MLP of a model over a labeled CSV; writes .mlq.");
  m.def("predict_file", &predict_file, py::arg("model"), py::arg("data"),
        py::arg("standardizer") = "", "Evaluate an .mlq model over a labeled CSV.");
  m.def("model_info", &model_info, py::arg("model"), "Header info of an .mlq file.");
  m.def("quantize_file", &quantize_file, py::arg("model"), py::arg("out"),
        "Post-training int8 quantization of a float .mlq.");
  m.def("carray", &carray, py::arg("model"), py::arg("symbol") = "model_data",
        "Render an .mlq file as a C byte array.");
  m.def("synth_dataset", &synth_dataset, py::arg("seed") = 1, py::arg("n") = 2205,
        py::arg("out") = "synth.csv", "Write the synthetic hydraulic dataset as CSV.");
  m.def("generate", &generate, py::arg("path"), py::arg("out"), py::arg("config") = "",
        py::arg("target") = "", py::arg("model") = "",
        "Generate a deployment tree; returns the written paths.");
  m.def("list_targets", &list_targets, "Known compiler targets as (id, display name).");
  m.def("fnv1a64", [](const std::string& s) { return mdml::codegen::fnv1a64(s); },
        py::arg("data"), "FNV-1a 64-bit hash.");
}
