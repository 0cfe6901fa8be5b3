#pragma once

#include <string>
#include <vector>

#include "mdml/token.hpp"

namespace mdml {

struct LexResult {
  std::vector<Token> tokens;  // always terminated by an EndOfFile token
  std::vector<ParseError> errors;

  bool ok() const { return errors.empty(); }
};

// Tokenizes UTF-8 source. Whitespace and comments (`// ...`, `/* ... */`)
// are skipped; annotations lex as `@key`. Lexing continues past errors so
// several problems can be reported at once.
LexResult tokenize(const std::string& text, const std::string& file = {});

}  // namespace mdml
