#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mdml/ast.hpp"
#include "mdml/diagnostics.hpp"
#include "mdml/ml/train.hpp"
#include "mdml/platform.hpp"

namespace mdml {

// A model with its import graph inlined. Node paths key the side tables:
// "" is the model root, "Sensor" a thing or configuration, "Sensor.temp"
// a member (property, message, port or instance).
struct LinkedModel {
  SourceModel merged;  // imports cleared, things and configurations inlined
  std::map<std::string, std::string> provenance;  // node path -> defining file
  std::map<std::string, std::string> references;  // "Config.instance" -> thing
  std::map<std::string, std::vector<Annotation>> effective_annotations;
};

using FileLoader = std::function<std::optional<std::string>(const std::string&)>;

// Reads the real filesystem; tests may substitute an in-memory loader.
FileLoader filesystem_loader();

// Depth-first import resolution from one entry file. Import paths resolve
// relative to the importing file; diamonds inline once, cycles and
// cross-file name collisions are errors. nullopt when `diags` has errors.
std::optional<LinkedModel> resolve_imports(const std::string& entry_path,
                                           const FileLoader& loader,
                                           std::vector<Diagnostic>& diags);

// Overlays platform-specific annotations and configurations onto a PIM.
// The overlay must not define things; its annotations land only in the
// effective-annotation table, so `strip` can recover the PIM exactly.
std::optional<LinkedModel> compose_psm(const SourceModel& pim, const SourceModel& overlay,
                                       std::vector<Diagnostic>& diags);

// Drops everything composition added. strip(compose_psm(p, o)) == p.
SourceModel strip(const LinkedModel& model);

// Last-writer-wins view of one annotation key on one node.
const Annotation* effective_annotation(const LinkedModel& model, const std::string& node_path,
                                       const std::string& key);

// Structural validation plus the cross-file keyword contracts: analytics
// references and types, algorithm registry and hyperparameter schemas,
// @compiler targets, instances and connector compatibility.
std::vector<Diagnostic> check_semantics(
    const LinkedModel& model,
    const std::vector<platform::PlatformProfile>& platforms = platform::builtin_registry());

// Everything mlcore needs to train a thing's analytics model. The shuffle
// flag is derived from `sequential`: time-ordered data must not shuffle.
struct TrainingPlan {
  std::vector<std::uint32_t> hidden_layers{32};
  ml::Activation hidden_activation = ml::Activation::Relu;
  std::uint32_t input_width = 0;
  ml::TrainConfig config;
};

std::optional<TrainingPlan> training_plan(const Thing& thing, std::string* error = nullptr);

// Total scalar width of the analytics feature columns.
std::optional<std::uint32_t> feature_width(const Thing& thing);

}  // namespace mdml
