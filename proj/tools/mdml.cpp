// mdml: single entry point for the modeling toolchain. Subcommands map
// onto the library modules; exit codes are part of the contract:
//   0 ok, 1 parse error, 2 semantic error, 3 deployability rejection,
//   4 I/O error, 5 numeric failure.

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

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
#include "mdml/simulate.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kParseError = 1;
constexpr int kSemanticError = 2;
constexpr int kDeployabilityError = 3;
constexpr int kIoError = 4;
constexpr int kNumericError = 5;

using nlohmann::json;

void print_diags(const std::vector<mdml::Diagnostic>& diags) {
  for (const auto& d : diags) std::cerr << d.to_string() << "\n";
}

json diag_json(const mdml::Diagnostic& d) {
  return json{{"severity", mdml::severity_name(d.severity)},
              {"node", d.node},
              {"message", d.message},
              {"file", d.location.file},
              {"line", d.location.line},
              {"column", d.location.column}};
}

json diags_json(const std::vector<mdml::Diagnostic>& diags) {
  json out = json::array();
  for (const auto& d : diags) out.push_back(diag_json(d));
  return out;
}

json metrics_json(const mdml::ml::Metrics& m) {
  return json{{"accuracy", m.accuracy},
              {"precision", m.precision},
              {"recall", m.recall},
              {"averaging", mdml::ml::averaging_name(m.averaging)},
              {"confusion",
               {{m.confusion[0][0], m.confusion[0][1]}, {m.confusion[1][0], m.confusion[1][1]}}}};
}

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) return std::nullopt;
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

bool write_file(const std::string& path, const void* data, std::size_t size) {
  std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  return bool(out);
}

// The user registry: builtins plus the MDML_PLATFORMS file, which may
// override a builtin by reusing its compiler_id.
int load_registry(std::vector<mdml::platform::PlatformProfile>& registry) {
  registry = mdml::platform::builtin_registry();
  const char* env = std::getenv("MDML_PLATFORMS");
  if (!env || !*env) return kOk;
  auto text = read_file(env);
  if (!text) {
    std::cerr << "cannot read MDML_PLATFORMS file '" << env << "'\n";
    return kIoError;
  }
  std::string error;
  auto extra = mdml::platform::load_platforms_json(*text, &error);
  if (!extra) {
    std::cerr << "MDML_PLATFORMS file '" << env << "': " << error << "\n";
    return kIoError;
  }
  for (auto& profile : *extra) {
    bool replaced = false;
    for (auto& existing : registry) {
      if (existing.id == profile.id) {
        existing = profile;
        replaced = true;
        break;
      }
    }
    if (!replaced) registry.push_back(std::move(profile));
  }
  return kOk;
}

// Shared model loading: I/O errors exit 4, an empty file is a parse error
// at 1:1, link failures exit 1.
int load_model(const std::string& path, std::optional<mdml::LinkedModel>& linked,
               std::vector<mdml::Diagnostic>& diags) {
  auto text = read_file(path);
  if (!text) {
    std::cerr << "cannot read '" << path << "'\n";
    return kIoError;
  }
  if (text->empty()) {
    diags.push_back(mdml::Diagnostic{mdml::Severity::Error, "model",
                                     "the model file is empty", {path, 1, 1}});
    return kParseError;
  }
  linked = mdml::resolve_imports(path, mdml::filesystem_loader(), diags);
  if (!linked) return kParseError;
  return kOk;
}

const mdml::Thing* pick_ml_thing(const mdml::SourceModel& m, const std::string& name,
                                 std::string* error) {
  if (!name.empty()) {
    const mdml::Thing* t = m.find_thing(name);
    if (!t) {
      *error = "thing '" + name + "' not found";
      return nullptr;
    }
    if (!t->analytics) {
      *error = "thing '" + name + "' declares no data_analytics block";
      return nullptr;
    }
    return t;
  }
  for (const auto& t : m.things)
    if (t.analytics) return &t;
  *error = "no thing declares a data_analytics block";
  return nullptr;
}

// ---- subcommands ----

struct CheckArgs {
  std::string file;
  bool json = false;
};

int run_check(const CheckArgs& args) {
  std::optional<mdml::LinkedModel> linked;
  std::vector<mdml::Diagnostic> diags;
  int rc = load_model(args.file, linked, diags);
  if (rc == kOk) {
    diags = mdml::check_semantics(*linked);
    if (mdml::has_errors(diags)) rc = kSemanticError;
  }
  if (args.json) {
    std::cout << json{{"ok", rc == kOk}, {"diagnostics", diags_json(diags)}}.dump(2) << "\n";
  } else {
    print_diags(diags);
  }
  return rc;
}

struct GenerateArgs {
  std::string file;
  std::string config;
  std::string target;
  std::string out_dir;
  std::string model_path;
  bool json = false;
};

int run_generate(const GenerateArgs& args) {
  std::vector<mdml::platform::PlatformProfile> registry;
  if (int rc = load_registry(registry); rc != kOk) return rc;

  std::optional<mdml::LinkedModel> linked;
  std::vector<mdml::Diagnostic> diags;
  if (int rc = load_model(args.file, linked, diags); rc != kOk) {
    print_diags(diags);
    return rc;
  }
  diags = mdml::check_semantics(*linked, registry);
  if (mdml::has_errors(diags)) {
    print_diags(diags);
    return kSemanticError;
  }

  mdml::ml::MlpModel trained;
  mdml::codegen::GenerateOptions opts;
  opts.configuration = args.config;
  opts.target = args.target;
  opts.platforms = &registry;
  if (!args.model_path.empty()) {
    auto bytes = read_file(args.model_path);
    if (!bytes) {
      std::cerr << "cannot read '" << args.model_path << "'\n";
      return kIoError;
    }
    std::string message;
    auto model = mdml::conv::load_mlq(
        std::vector<std::uint8_t>(bytes->begin(), bytes->end()), nullptr, &message);
    if (!model) {
      std::cerr << args.model_path << ": " << message << "\n";
      return kParseError;
    }
    if (!std::holds_alternative<mdml::ml::MlpModel>(*model)) {
      std::cerr << args.model_path
                << ": pass the float model; quantized conversion happens per target\n";
      return kSemanticError;
    }
    trained = std::get<mdml::ml::MlpModel>(*model);
    opts.model = &trained;
  }

  diags.clear();
  auto tree = mdml::codegen::generate(*linked, opts, diags);
  if (!tree) {
    print_diags(diags);
    for (const auto& d : diags)
      if (d.node == "deployability") return kDeployabilityError;
    return kSemanticError;
  }
  std::string error;
  if (!mdml::codegen::write_tree(*tree, args.out_dir, &error)) {
    std::cerr << error << "\n";
    return kIoError;
  }
  if (args.json) {
    json files = json::array();
    for (const auto& f : tree->files) files.push_back(f.path);
    std::cout << json{{"out", args.out_dir},
                      {"configuration", tree->configuration},
                      {"target", tree->target},
                      {"files", files}}
                     .dump(2)
              << "\n";
  } else {
    std::cout << "generated " << tree->files.size() << " files under " << args.out_dir << "/"
              << tree->configuration << "/" << tree->target << "\n";
  }
  return kOk;
}

struct TrainArgs {
  std::string file;
  std::string data;
  std::string out;
  std::string thing;
  std::optional<std::uint64_t> seed;
  bool json = false;
};

int run_train(const TrainArgs& args) {
  std::optional<mdml::LinkedModel> linked;
  std::vector<mdml::Diagnostic> diags;
  if (int rc = load_model(args.file, linked, diags); rc != kOk) {
    print_diags(diags);
    return rc;
  }
  diags = mdml::check_semantics(*linked);
  if (mdml::has_errors(diags)) {
    print_diags(diags);
    return kSemanticError;
  }

  std::string error;
  const mdml::Thing* thing = pick_ml_thing(linked->merged, args.thing, &error);
  if (!thing) {
    std::cerr << args.file << ": " << error << "\n";
    return kSemanticError;
  }
  auto plan = mdml::training_plan(*thing, &error);
  if (!plan) {
    std::cerr << args.file << ": " << error << "\n";
    return kSemanticError;
  }

  auto data = mdml::ml::load_csv(args.data, &error);
  if (!data) {
    std::cerr << error << "\n";
    return kIoError;
  }
  if (data->cols != plan->input_width) {
    std::cerr << args.data << ": dataset has " << data->cols
              << " feature columns, thing '" << thing->name << "' expects "
              << plan->input_width << "\n";
    return kSemanticError;
  }
  auto split = mdml::ml::chronological_split(*data, 0.8);
  if (!split) {
    std::cerr << args.data << ": not enough rows for an 80/20 split\n";
    return kSemanticError;
  }
  auto standardizer = mdml::ml::fit_standardizer(split->first);
  if (!standardizer) {
    std::cerr << args.data << ": cannot fit a standardizer on the training split\n";
    return kSemanticError;
  }
  mdml::ml::transform(*standardizer, split->first);
  mdml::ml::transform(*standardizer, split->second);

  std::vector<std::uint32_t> dims;
  dims.push_back(plan->input_width);
  dims.insert(dims.end(), plan->hidden_layers.begin(), plan->hidden_layers.end());
  dims.push_back(2);
  auto arch = mdml::ml::MlpArchitecture::dense(dims, plan->hidden_activation);
  mdml::ml::TrainConfig cfg = plan->config;
  if (args.seed) cfg.seed = *args.seed;

  auto result = mdml::ml::train(arch, split->first, cfg);
  if (!result.history.error.empty()) {
    std::cerr << args.file << ": " << result.history.error << "\n";
    return result.history.stop_reason == "nan_loss" ? kNumericError : kSemanticError;
  }

  auto metrics = mdml::ml::evaluate(result.model, split->second);

  auto bytes = mdml::conv::save_mlq(result.model);
  if (!write_file(args.out, bytes.data(), bytes.size())) {
    std::cerr << "cannot write '" << args.out << "'\n";
    return kIoError;
  }
  std::string std_json = mdml::ml::standardizer_to_json(*standardizer);
  if (!write_file(args.out + ".standardizer.json", std_json.data(), std_json.size())) {
    std::cerr << "cannot write '" << args.out << ".standardizer.json'\n";
    return kIoError;
  }

  json report{{"thing", thing->name},
              {"architecture", dims},
              {"seed", cfg.seed},
              {"train_rows", split->first.rows},
              {"test_rows", split->second.rows},
              {"stopped_epoch", result.history.stopped_epoch},
              {"stop_reason", result.history.stop_reason},
              {"metrics", metrics_json(metrics)}};
  std::string report_text = report.dump(2) + "\n";
  if (!write_file(args.out + ".metrics.json", report_text.data(), report_text.size())) {
    std::cerr << "cannot write '" << args.out << ".metrics.json'\n";
    return kIoError;
  }

  // The training log lands next to the model; a training_results path on
  // the analytics block names the file.
  std::filesystem::path log_path = std::filesystem::path(args.out).parent_path();
  std::string log_name = thing->analytics->training_results.empty()
                             ? std::filesystem::path(args.out).filename().string() +
                                   ".training_log.txt"
                             : thing->analytics->training_results;
  log_path /= log_name;
  std::ostringstream log;
  for (std::size_t i = 0; i < result.history.epochs.size(); ++i) {
    const auto& e = result.history.epochs[i];
    log << "epoch " << (i + 1) << " train_loss " << e.train_loss << " val_loss " << e.val_loss
        << " train_accuracy " << e.train_accuracy << "\n";
  }
  log << "stopped_epoch " << result.history.stopped_epoch << "\n";
  log << "stop_reason " << result.history.stop_reason << "\n";
  std::string log_text = log.str();
  if (!write_file(log_path.string(), log_text.data(), log_text.size())) {
    std::cerr << "cannot write '" << log_path.string() << "'\n";
    return kIoError;
  }

  if (args.json) {
    std::cout << report.dump(2) << "\n";
  } else {
    std::cout << "trained thing '" << thing->name << "': accuracy " << metrics.accuracy
              << ", precision " << metrics.precision << ", recall " << metrics.recall
              << " on " << split->second.rows << " test rows ("
              << result.history.stop_reason << " after epoch "
              << result.history.stopped_epoch << ")\n";
  }
  return kOk;
}

struct PredictArgs {
  std::string model;
  std::string data;
  std::string standardizer;
  bool quantize = false;
  bool json = false;
};

int run_predict(const PredictArgs& args) {
  auto bytes = read_file(args.model);
  if (!bytes) {
    std::cerr << "cannot read '" << args.model << "'\n";
    return kIoError;
  }
  std::string message;
  auto loaded = mdml::conv::load_mlq(
      std::vector<std::uint8_t>(bytes->begin(), bytes->end()), nullptr, &message);
  if (!loaded) {
    std::cerr << args.model << ": " << message << "\n";
    return kParseError;
  }

  std::string error;
  auto data = mdml::ml::load_csv(args.data, &error);
  if (!data) {
    std::cerr << error << "\n";
    return kIoError;
  }
  if (!args.standardizer.empty()) {
    auto text = read_file(args.standardizer);
    if (!text) {
      std::cerr << "cannot read '" << args.standardizer << "'\n";
      return kIoError;
    }
    auto std = mdml::ml::standardizer_from_json(*text);
    if (!std || std->mean.size() != data->cols) {
      std::cerr << args.standardizer << ": standardizer does not match the dataset\n";
      return kSemanticError;
    }
    mdml::ml::transform(*std, *data);
  }

  std::optional<mdml::conv::QuantizedMlpModel> qmodel;
  const mdml::ml::MlpModel* fmodel = nullptr;
  if (std::holds_alternative<mdml::conv::QuantizedMlpModel>(*loaded)) {
    qmodel = std::get<mdml::conv::QuantizedMlpModel>(*loaded);
  } else if (args.quantize) {
    qmodel = mdml::conv::quantize(std::get<mdml::ml::MlpModel>(*loaded), &error);
    if (!qmodel) {
      std::cerr << args.model << ": " << error << "\n";
      return kNumericError;
    }
  } else {
    fmodel = &std::get<mdml::ml::MlpModel>(*loaded);
  }

  std::vector<int> actual, predicted;
  json rows = json::array();
  std::ostringstream csv;
  csv << "row,actual,predicted\n";
  for (std::size_t i = 0; i < data->rows; ++i) {
    auto p = qmodel ? mdml::conv::predict_quantized(*qmodel, data->row(i), data->cols)
                    : mdml::ml::predict(*fmodel, data->row(i), data->cols);
    if (!p) {
      std::cerr << args.data << ": row width does not match the model input\n";
      return kSemanticError;
    }
    actual.push_back(data->y[i]);
    predicted.push_back(p->label);
    csv << i << "," << data->y[i] << "," << p->label << "\n";
    if (args.json) rows.push_back(p->label);
  }
  auto metrics = mdml::ml::compute_metrics(actual, predicted);
  if (args.json) {
    std::cout << json{{"predictions", rows}, {"metrics", metrics_json(metrics)}}.dump(2)
              << "\n";
  } else {
    std::cout << csv.str();
    std::cout << "# accuracy " << metrics.accuracy << " precision " << metrics.precision
              << " recall " << metrics.recall << "\n";
  }
  return kOk;
}

struct ConvertArgs {
  std::string model;
  std::string out;
  bool quantize = false;
  bool json = false;
};

int run_convert(const ConvertArgs& args) {
  if (!args.quantize) {
    std::cerr << "nothing to do; pass --quantize\n";
    return kSemanticError;
  }
  auto bytes = read_file(args.model);
  if (!bytes) {
    std::cerr << "cannot read '" << args.model << "'\n";
    return kIoError;
  }
  std::string message;
  auto loaded = mdml::conv::load_mlq(
      std::vector<std::uint8_t>(bytes->begin(), bytes->end()), nullptr, &message);
  if (!loaded) {
    std::cerr << args.model << ": " << message << "\n";
    return kParseError;
  }
  if (std::holds_alternative<mdml::conv::QuantizedMlpModel>(*loaded)) {
    std::cerr << args.model << ": the model is already quantized\n";
    return kSemanticError;
  }
  std::string error;
  auto qmodel = mdml::conv::quantize(std::get<mdml::ml::MlpModel>(*loaded), &error);
  if (!qmodel) {
    std::cerr << args.model << ": " << error << "\n";
    return kNumericError;
  }
  auto out_bytes = mdml::conv::save_mlq(*qmodel);
  if (!write_file(args.out, out_bytes.data(), out_bytes.size())) {
    std::cerr << "cannot write '" << args.out << "'\n";
    return kIoError;
  }
  if (args.json) {
    std::cout << json{{"in_bytes", bytes->size()}, {"out_bytes", out_bytes.size()}}.dump(2)
              << "\n";
  } else {
    std::cout << "quantized " << bytes->size() << " -> " << out_bytes.size() << " bytes\n";
  }
  return kOk;
}

struct DumpArgs {
  std::string model;
  std::string symbol = "model_data";
  std::string out;
  bool json = false;
};

int run_dump(const DumpArgs& args) {
  auto bytes = read_file(args.model);
  if (!bytes) {
    std::cerr << "cannot read '" << args.model << "'\n";
    return kIoError;
  }
  std::string text = mdml::conv::emit_carray(
      std::vector<std::uint8_t>(bytes->begin(), bytes->end()), args.symbol);
  if (args.out.empty()) {
    std::cout << text;
  } else if (!write_file(args.out, text.data(), text.size())) {
    std::cerr << "cannot write '" << args.out << "'\n";
    return kIoError;
  }
  if (args.json)
    std::cout << json{{"symbol", args.symbol},
                      {"payload_bytes", bytes->size()},
                      {"dump_bytes", text.size()}}
                     .dump(2)
              << "\n";
  return kOk;
}

struct EstimateArgs {
  std::string arch;
  std::string platform;
  std::string policy = "paper";
  bool json = false;
};

int run_estimate(const EstimateArgs& args) {
  std::vector<mdml::platform::PlatformProfile> registry;
  if (int rc = load_registry(registry); rc != kOk) return rc;

  std::vector<std::uint32_t> dims;
  std::size_t pos = 0;
  while (pos <= args.arch.size()) {
    std::size_t comma = args.arch.find(',', pos);
    std::string part = args.arch.substr(pos, comma == std::string::npos ? comma : comma - pos);
    std::uint32_t v = 0;
    auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc{} || p != part.data() + part.size() || v == 0) {
      std::cerr << "--arch: '" << part << "' is not a positive integer\n";
      return kSemanticError;
    }
    dims.push_back(v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  auto sizes = mdml::platform::estimate_sizes(mdml::ml::MlpArchitecture::dense(dims));
  if (!sizes) {
    std::cerr << "--arch: expected at least two comma-separated layer widths\n";
    return kSemanticError;
  }

  json out{{"architecture", dims},
           {"param_count", sizes->param_count},
           {"float_bytes", sizes->float_bytes},
           {"quantized_bytes", sizes->quantized_bytes},
           {"carray_bytes", sizes->carray_bytes},
           {"arena_bytes", sizes->arena_bytes},
           {"expansion_ratio", sizes->expansion_ratio}};

  int rc = kOk;
  if (!args.platform.empty()) {
    const auto* profile = mdml::platform::find_platform(registry, args.platform);
    if (!profile) {
      std::cerr << "unknown platform '" << args.platform << "'\n";
      return kSemanticError;
    }
    auto policy = args.policy == "strict" ? mdml::platform::DeployPolicy::Strict
                                          : mdml::platform::DeployPolicy::PaperCompat;
    auto decision = mdml::platform::check_deployability(*sizes, *profile, policy);
    out["platform"] = profile->id;
    out["policy"] = args.policy;
    out["accepted"] = decision.accepted;
    out["binding_constraint"] = decision.binding_constraint;
    out["margin_bytes"] = decision.margin_bytes;
    if (!decision.accepted) rc = kDeployabilityError;
  }

  if (args.json) {
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << "parameters " << sizes->param_count << "\n"
              << "float32 " << sizes->float_bytes << " bytes\n"
              << "int8 " << sizes->quantized_bytes << " bytes\n"
              << "c_array " << sizes->carray_bytes << " bytes\n"
              << "arena " << sizes->arena_bytes << " bytes\n";
    if (out.contains("accepted")) {
      if (out["accepted"].get<bool>()) {
        std::cout << "deploy to '" << args.platform << "' (" << args.policy
                  << "): accepted";
        if (!out["binding_constraint"].get<std::string>().empty())
          std::cout << ", " << out["margin_bytes"].get<std::uint64_t>()
                    << " bytes headroom on " << out["binding_constraint"].get<std::string>();
        std::cout << "\n";
      } else {
        std::cout << "deploy to '" << args.platform << "' (" << args.policy << "): rejected, "
                  << out["binding_constraint"].get<std::string>() << " overrun by "
                  << out["margin_bytes"].get<std::uint64_t>() << " bytes\n";
      }
    }
  }
  return rc;
}

struct SimulateArgs {
  std::string file;
  std::string thing;
  std::string events;
  bool json = false;
};

std::optional<mdml::Value> parse_event_value(std::string s) {
  auto trim = [](std::string& t) {
    while (!t.empty() && std::isspace(static_cast<unsigned char>(t.front()))) t.erase(0, 1);
    while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back()))) t.pop_back();
  };
  trim(s);
  if (s.empty()) return std::nullopt;
  if (s == "true") return mdml::Value{true};
  if (s == "false") return mdml::Value{false};
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
    return mdml::Value{s.substr(1, s.size() - 2)};
  std::int64_t i = 0;
  auto [ip, iec] = std::from_chars(s.data(), s.data() + s.size(), i);
  if (iec == std::errc{} && ip == s.data() + s.size()) return mdml::Value{i};
  double d = 0.0;
  auto [dp, dec] = std::from_chars(s.data(), s.data() + s.size(), d);
  if (dec == std::errc{} && dp == s.data() + s.size()) return mdml::Value{d};
  return mdml::Value{s};
}

// "comm?tick,bus?data(1,true)" -> events; commas inside parens separate args
bool parse_events(const std::string& text, std::vector<mdml::Event>& events,
                  std::string* error) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    int depth = 0;
    std::size_t end = pos;
    while (end < text.size() && (depth > 0 || text[end] != ',')) {
      if (text[end] == '(') depth++;
      if (text[end] == ')') depth--;
      end++;
    }
    std::string token = text.substr(pos, end - pos);
    pos = end + (end < text.size() ? 1 : 0);
    if (token.empty()) continue;

    std::size_t q = token.find('?');
    if (q == std::string::npos) {
      *error = "event '" + token + "' must look like port?message";
      return false;
    }
    mdml::Event ev;
    ev.port = token.substr(0, q);
    std::string rest = token.substr(q + 1);
    std::size_t open = rest.find('(');
    if (open == std::string::npos) {
      ev.message = rest;
    } else {
      if (rest.back() != ')') {
        *error = "event '" + token + "' has an unterminated argument list";
        return false;
      }
      ev.message = rest.substr(0, open);
      std::string argtext = rest.substr(open + 1, rest.size() - open - 2);
      std::size_t apos = 0;
      while (apos <= argtext.size() && !argtext.empty()) {
        std::size_t comma = argtext.find(',', apos);
        std::string part =
            argtext.substr(apos, comma == std::string::npos ? comma : comma - apos);
        auto v = parse_event_value(part);
        if (!v) {
          *error = "event '" + token + "' has an empty argument";
          return false;
        }
        ev.args.push_back(*v);
        if (comma == std::string::npos) break;
        apos = comma + 1;
      }
    }
    events.push_back(std::move(ev));
  }
  return true;
}

int run_simulate(const SimulateArgs& args) {
  std::optional<mdml::LinkedModel> linked;
  std::vector<mdml::Diagnostic> diags;
  if (int rc = load_model(args.file, linked, diags); rc != kOk) {
    print_diags(diags);
    return rc;
  }

  const mdml::Thing* thing = nullptr;
  if (!args.thing.empty()) {
    thing = linked->merged.find_thing(args.thing);
    if (!thing) {
      std::cerr << args.file << ": thing '" << args.thing << "' not found\n";
      return kSemanticError;
    }
  } else if (linked->merged.things.size() == 1) {
    thing = &linked->merged.things.front();
  } else {
    std::cerr << args.file << ": pass --thing to pick one of "
              << linked->merged.things.size() << " things\n";
    return kSemanticError;
  }
  if (!thing->statechart) {
    std::cerr << args.file << ": thing '" << thing->name << "' has no statechart\n";
    return kSemanticError;
  }

  std::vector<mdml::Event> events;
  std::string error;
  if (!parse_events(args.events, events, &error)) {
    std::cerr << "--events: " << error << "\n";
    return kSemanticError;
  }

  auto result = mdml::simulate_statechart(*thing, events);
  if (args.json) {
    json emitted = json::array();
    for (const auto& m : result.trace.emitted) emitted.push_back(m.to_string());
    std::cout << json{{"ok", result.ok()},
                      {"states", result.trace.states},
                      {"emitted", emitted},
                      {"steps", result.trace.steps},
                      {"diagnostics", diags_json(result.errors)}}
                     .dump(2)
              << "\n";
  } else {
    std::cout << "trace:";
    for (const auto& s : result.trace.states) std::cout << " " << s;
    std::cout << "\n";
    for (const auto& m : result.trace.emitted) std::cout << "emitted: " << m.to_string() << "\n";
    std::cout << "steps: " << result.trace.steps << "\n";
    print_diags(result.errors);
  }
  return result.ok() ? kOk : kSemanticError;
}

struct SynthArgs {
  std::size_t n = 2205;
  std::uint64_t seed = 1;
  std::string out;
  bool json = false;
};

int run_synth(const SynthArgs& args) {
  auto data = mdml::ml::synth_hydraulic_dataset(args.seed, args.n);
  std::string error;
  if (!mdml::ml::save_csv(data, args.out, &error)) {
    std::cerr << error << "\n";
    return kIoError;
  }
  std::size_t negatives = 0;
  for (int y : data.y) negatives += y == 0;
  if (args.json) {
    std::cout << json{{"rows", data.rows},
                      {"cols", data.cols},
                      {"class_0", negatives},
                      {"class_1", data.rows - negatives},
                      {"seed", args.seed},
                      {"path", args.out}}
                     .dump(2)
              << "\n";
  } else {
    std::cout << "wrote " << data.rows << " rows x " << data.cols << " channels to "
              << args.out << " (" << negatives << " healthy, " << (data.rows - negatives)
              << " leaky)\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mdml - model-driven toolchain for smart IoT services"};
  app.require_subcommand(1);

  CheckArgs check_args;
  auto* check = app.add_subcommand("check", "parse, link and validate a model");
  check->add_option("file", check_args.file, "model file")->required();
  check->add_flag("--json", check_args.json, "structured output");

  GenerateArgs gen_args;
  auto* generate = app.add_subcommand("generate", "emit a deployment source tree");
  generate->add_option("file", gen_args.file, "PSM model file")->required();
  generate->add_option("--config", gen_args.config, "configuration name");
  generate->add_option("--target", gen_args.target, "override the @compiler target");
  generate->add_option("-o,--out", gen_args.out_dir, "output directory")->required();
  generate->add_option("--model", gen_args.model_path, "trained .mlq to embed");
  generate->add_flag("--json", gen_args.json, "structured output");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "train the analytics model natively");
  train->add_option("file", train_args.file, "model file")->required();
  train->add_option("--data", train_args.data, "training CSV")->required();
  train->add_option("-o,--out", train_args.out, "output .mlq path")->required();
  train->add_option("--thing", train_args.thing, "thing to train (default: first with analytics)");
  train->add_option("--seed", train_args.seed, "override the model seed");
  train->add_flag("--json", train_args.json, "structured output");

  PredictArgs predict_args;
  auto* predict = app.add_subcommand("predict", "run a model over a labeled CSV");
  predict->add_option("model", predict_args.model, ".mlq model file")->required();
  predict->add_option("--data", predict_args.data, "input CSV")->required();
  predict->add_option("--standardizer", predict_args.standardizer, "standardizer JSON");
  predict->add_flag("--quantized", predict_args.quantize, "quantize a float model first");
  predict->add_flag("--json", predict_args.json, "structured output");

  ConvertArgs convert_args;
  auto* convert = app.add_subcommand("convert", "convert a model container");
  convert->add_option("model", convert_args.model, ".mlq model file")->required();
  convert->add_flag("--quantize", convert_args.quantize, "post-training int8 quantization");
  convert->add_option("-o,--out", convert_args.out, "output .mlq path")->required();
  convert->add_flag("--json", convert_args.json, "structured output");

  DumpArgs dump_args;
  auto* dump = app.add_subcommand("dump", "hex dump a model as a C array");
  dump->add_option("model", dump_args.model, ".mlq model file")->required();
  dump->add_option("--symbol", dump_args.symbol, "array symbol name");
  dump->add_option("-o,--out", dump_args.out, "output .cc path (default stdout)");
  dump->add_flag("--json", dump_args.json, "structured output");

  EstimateArgs est_args;
  auto* estimate = app.add_subcommand("estimate", "size and deployability report");
  estimate->add_option("--arch", est_args.arch, "layer widths, e.g. 6120,32,2")->required();
  estimate->add_option("--platform", est_args.platform, "platform id");
  estimate->add_option("--policy", est_args.policy, "paper or strict")
      ->check(CLI::IsMember({"paper", "strict"}));
  estimate->add_flag("--json", est_args.json, "structured output");

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "run a statechart over an event list");
  simulate->add_option("file", sim_args.file, "model file")->required();
  simulate->add_option("--thing", sim_args.thing, "thing to simulate");
  simulate->add_option("--events", sim_args.events, "comma list, e.g. comm?tick,bus?set(1)");
  simulate->add_flag("--json", sim_args.json, "structured output");

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth-data", "generate the synthetic hydraulic dataset");
  synth->add_option("-n,--rows", synth_args.n, "row count");
  synth->add_option("--seed", synth_args.seed, "RNG seed");
  synth->add_option("-o,--out", synth_args.out, "output CSV path")->required();
  synth->add_flag("--json", synth_args.json, "structured output");

  CLI11_PARSE(app, argc, argv);

  if (check->parsed()) return run_check(check_args);
  if (generate->parsed()) return run_generate(gen_args);
  if (train->parsed()) return run_train(train_args);
  if (predict->parsed()) return run_predict(predict_args);
  if (convert->parsed()) return run_convert(convert_args);
  if (dump->parsed()) return run_dump(dump_args);
  if (estimate->parsed()) return run_estimate(est_args);
  if (simulate->parsed()) return run_simulate(sim_args);
  if (synth->parsed()) return run_synth(synth_args);
  return kOk;
}
