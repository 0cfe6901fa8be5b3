#pragma once

#include <string>

#include "mdml/ast.hpp"

namespace mdml {

// Canonical formatting. Guarantees parse(pretty_print(m)) is structurally
// equal to m for any valid model, and is a fixpoint: printing the reparsed
// output reproduces it byte for byte.
std::string pretty_print(const SourceModel& model);

std::string expr_to_source(const Expr& expr);
std::string action_to_source(const Action& action);

}  // namespace mdml
