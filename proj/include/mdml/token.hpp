#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mdml/diagnostics.hpp"

namespace mdml {

enum class TokenKind {
  Keyword,
  Identifier,
  Integer,
  Float,
  String,
  AnnotationKey,
  Punct,
  EndOfFile,
};

const char* token_kind_name(TokenKind k);

struct Token {
  TokenKind kind = TokenKind::EndOfFile;
  // Semantic text: identifier/keyword spelling, number spelling, decoded
  // string contents, annotation key without the '@'.
  std::string lexeme;
  // Raw source span, so tokens plus skipped trivia cover the input exactly.
  std::size_t offset = 0;
  std::size_t length = 0;
  int line = 1;    // 1-based
  int column = 1;  // 1-based

  SourceLocation location(const std::string& file = {}) const {
    return SourceLocation{file, line, column};
  }
  bool is_keyword(const char* kw) const {
    return kind == TokenKind::Keyword && lexeme == kw;
  }
  bool is_punct(const char* p) const {
    return kind == TokenKind::Punct && lexeme == p;
  }
  std::string describe() const;
};

struct ParseError {
  std::string message;
  std::vector<std::string> expected;
  std::string found;  // description of the offending token
  SourceLocation location;

  std::string to_string() const;
  Diagnostic to_diagnostic() const;
};

bool is_keyword_word(const std::string& word);

}  // namespace mdml
