#pragma once

#include <vector>

#include "mdml/ast.hpp"
#include "mdml/diagnostics.hpp"

namespace mdml {

// Structural well-formedness: name uniqueness, reference resolution inside
// each thing, statechart consistency. Pure; an empty result means the model
// satisfies every structural invariant.
std::vector<Diagnostic> validate_structure(const SourceModel& model);

}  // namespace mdml
