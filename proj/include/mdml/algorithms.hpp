#pragma once

// Registry of known model_algorithm names and their hyperparameter schemas,
// consumed by the linker's semantic checks.

#include <optional>
#include <string>
#include <vector>

#include "mdml/ast.hpp"
#include "mdml/diagnostics.hpp"

namespace mdml {

enum class HyperKind {
  PositiveInt,
  NonNegativeInt,
  PositiveIntList,
  PositiveFloat,
  UnitFloat,  // strictly between 0 and 1
  Choice,
};

struct HyperSchema {
  std::string name;
  HyperKind kind;
  std::vector<std::string> choices;  // Choice only
};

struct AlgorithmSchema {
  std::string name;
  std::vector<HyperSchema> params;

  const HyperSchema* find_param(const std::string& name) const;
};

const std::vector<AlgorithmSchema>& algorithm_registry();
const AlgorithmSchema* find_algorithm(const std::string& name);
std::vector<std::string> algorithm_names();

// Type-checks one hyperparameter assignment against a schema entry.
// Returns an error message, or nullopt when the values fit.
std::optional<std::string> check_hyperparameter(const HyperSchema& schema,
                                                const Hyperparameter& hp);

}  // namespace mdml
