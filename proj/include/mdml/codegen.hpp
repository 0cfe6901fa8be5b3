#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mdml/linker.hpp"
#include "mdml/ml/mlp.hpp"
#include "mdml/platform.hpp"

namespace mdml::codegen {

struct GeneratedFile {
  std::string path;  // relative, '/' separated, no parent traversal
  std::string bytes;

  bool operator==(const GeneratedFile&) const = default;
};

// One deployable source tree. Files are sorted by path and unique, and
// regeneration from identical inputs yields byte-identical trees.
struct GeneratedTree {
  std::string configuration;
  std::string target;
  std::vector<GeneratedFile> files;

  const GeneratedFile* find(const std::string& path) const;
  bool operator==(const GeneratedTree&) const = default;
};

struct GenerateOptions {
  // Configuration to generate for; may be empty when the model declares
  // exactly one.
  std::string configuration;
  // Overrides the configuration's @compiler annotation when non-empty.
  std::string target;
  // Trained model to embed. When null a deterministically initialized
  // model is derived from the thing's training plan.
  const ml::MlpModel* model = nullptr;
  const std::vector<platform::PlatformProfile>* platforms = nullptr;
};

// Emits the full tree for one configuration. Requires a model that passed
// check_semantics. Targets deploying to a constrained platform run the
// deployability check first; a rejection is reported as an error diagnostic
// with node "deployability" and generation fails.
std::optional<GeneratedTree> generate(const LinkedModel& model, const GenerateOptions& opts,
                                      std::vector<Diagnostic>& diags);

// (compiler_id, display name) pairs, sorted by id.
std::vector<std::pair<std::string, std::string>> list_targets(
    const std::vector<platform::PlatformProfile>& registry = platform::builtin_registry());

// Writes the tree under <out_dir>/<configuration>/<target>/, creating
// directories as needed. Each file is written to a temp name and renamed.
bool write_tree(const GeneratedTree& tree, const std::string& out_dir,
                std::string* error = nullptr);

std::uint64_t fnv1a64(std::string_view bytes);

// Replaces every {{key}} in the template with its substitution. Unknown
// placeholders are left verbatim so they show up in snapshots.
std::string render_template(
    std::string_view tmpl,
    const std::vector<std::pair<std::string, std::string>>& substitutions);

}  // namespace mdml::codegen
