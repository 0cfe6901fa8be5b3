#pragma once

#include <string>
#include <vector>

#include "mdml/ast.hpp"
#include "mdml/token.hpp"

namespace mdml {

struct ParseResult {
  SourceModel model;
  std::vector<ParseError> errors;

  bool ok() const { return errors.empty(); }
  std::vector<Diagnostic> diagnostics() const;
};

// Parses one `.mdml` source into a SourceModel. Recovery happens at
// statement boundaries so a single pass reports multiple errors; the model
// is only meaningful when `ok()`.
ParseResult parse(const std::string& text, const std::string& file = {});

}  // namespace mdml
