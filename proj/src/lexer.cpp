#include "mdml/lexer.hpp"

#include <array>
#include <cctype>
#include <sstream>
#include <unordered_set>

namespace mdml {

namespace {

const std::unordered_set<std::string>& keyword_set() {
  static const std::unordered_set<std::string> kw = {
      "import",        "thing",         "property",
      "message",       "port",          "provided",
      "required",      "receives",      "sends",
      "statechart",    "init",          "state",
      "transition",    "event",         "guard",
      "on",            "entry",         "send",
      "set",           "configuration", "instance",
      "connector",     "data_analytics", "labels",
      "features",      "prediction_results", "sequential",
      "timestamps",    "model_algorithm", "training_results",
      "dataset",       "true",          "false",
      "and",           "or",            "not",
      "ON",            "OFF",           "SEMI",
  };
  return kw;
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return c >= '0' && c <= '9'; }

struct Cursor {
  const std::string& text;
  std::size_t pos = 0;
  int line = 1;
  int column = 1;

  bool done() const { return pos >= text.size(); }
  char peek(std::size_t ahead = 0) const {
    return pos + ahead < text.size() ? text[pos + ahead] : '\0';
  }
  void advance() {
    if (text[pos] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
    ++pos;
  }
};

}  // namespace

const char* token_kind_name(TokenKind k) {
  switch (k) {
    case TokenKind::Keyword: return "keyword";
    case TokenKind::Identifier: return "identifier";
    case TokenKind::Integer: return "integer";
    case TokenKind::Float: return "float";
    case TokenKind::String: return "string";
    case TokenKind::AnnotationKey: return "annotation-key";
    case TokenKind::Punct: return "punctuation";
    case TokenKind::EndOfFile: return "end of file";
  }
  return "token";
}

std::string Token::describe() const {
  if (kind == TokenKind::EndOfFile) return "end of file";
  std::ostringstream out;
  out << token_kind_name(kind) << " '" << (kind == TokenKind::AnnotationKey ? "@" : "")
      << lexeme << "'";
  return out.str();
}

static std::string error_detail(const ParseError& e) {
  std::ostringstream out;
  out << e.message;
  if (!e.expected.empty()) {
    out << " (expected ";
    for (std::size_t i = 0; i < e.expected.size(); ++i) {
      if (i) out << (i + 1 == e.expected.size() ? " or " : ", ");
      out << e.expected[i];
    }
    if (!e.found.empty()) out << ", found " << e.found;
    out << ")";
  } else if (!e.found.empty()) {
    out << " (found " << e.found << ")";
  }
  return out.str();
}

std::string ParseError::to_string() const {
  return location.to_string() + ": error: " + error_detail(*this);
}

Diagnostic ParseError::to_diagnostic() const {
  Diagnostic d;
  d.severity = Severity::Error;
  d.message = error_detail(*this);
  d.location = location;
  return d;
}

bool is_keyword_word(const std::string& word) { return keyword_set().count(word) > 0; }

LexResult tokenize(const std::string& text, const std::string& file) {
  LexResult result;
  Cursor cur{text};

  auto error_at = [&](int line, int column, std::string msg) {
    ParseError err;
    err.message = std::move(msg);
    err.location = SourceLocation{file, line, column};
    result.errors.push_back(std::move(err));
  };

  auto push = [&](TokenKind kind, std::string lexeme, std::size_t offset, int line,
                  int column) {
    Token tok;
    tok.kind = kind;
    tok.lexeme = std::move(lexeme);
    tok.offset = offset;
    tok.length = cur.pos - offset;
    tok.line = line;
    tok.column = column;
    result.tokens.push_back(std::move(tok));
  };

  while (!cur.done()) {
    char c = cur.peek();
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      cur.advance();
      continue;
    }
    if (c == '/' && cur.peek(1) == '/') {
      while (!cur.done() && cur.peek() != '\n') cur.advance();
      continue;
    }
    if (c == '/' && cur.peek(1) == '*') {
      int line = cur.line, column = cur.column;
      cur.advance();
      cur.advance();
      bool closed = false;
      while (!cur.done()) {
        if (cur.peek() == '*' && cur.peek(1) == '/') {
          cur.advance();
          cur.advance();
          closed = true;
          break;
        }
        cur.advance();
      }
      if (!closed) error_at(line, column, "unterminated block comment");
      continue;
    }

    std::size_t start = cur.pos;
    int line = cur.line, column = cur.column;

    if (ident_start(c)) {
      while (!cur.done() && ident_char(cur.peek())) cur.advance();
      std::string word = text.substr(start, cur.pos - start);
      TokenKind kind = is_keyword_word(word) ? TokenKind::Keyword : TokenKind::Identifier;
      push(kind, std::move(word), start, line, column);
      continue;
    }

    if (digit(c)) {
      bool is_float = false;
      while (!cur.done() && digit(cur.peek())) cur.advance();
      if (cur.peek() == '.' && digit(cur.peek(1))) {
        is_float = true;
        cur.advance();
        while (!cur.done() && digit(cur.peek())) cur.advance();
      }
      if (cur.peek() == 'e' || cur.peek() == 'E') {
        std::size_t mark = 1;
        if (cur.peek(1) == '+' || cur.peek(1) == '-') mark = 2;
        if (digit(cur.peek(mark))) {
          is_float = true;
          for (std::size_t i = 0; i <= mark; ++i) cur.advance();
          while (!cur.done() && digit(cur.peek())) cur.advance();
        }
      }
      push(is_float ? TokenKind::Float : TokenKind::Integer,
           text.substr(start, cur.pos - start), start, line, column);
      continue;
    }

    if (c == '"') {
      cur.advance();
      std::string value;
      bool closed = false;
      while (!cur.done()) {
        char d = cur.peek();
        if (d == '"') {
          cur.advance();
          closed = true;
          break;
        }
        if (d == '\n') break;  // strings may not span lines
        if (d == '\\') {
          cur.advance();
          char e = cur.peek();
          switch (e) {
            case '"': value += '"'; break;
            case '\\': value += '\\'; break;
            case 'n': value += '\n'; break;
            case 't': value += '\t'; break;
            case 'r': value += '\r'; break;
            default:
              value += '\\';
              value += e;
          }
          if (!cur.done()) cur.advance();
          continue;
        }
        value += d;
        cur.advance();
      }
      if (!closed) {
        error_at(line, column, "unterminated string literal");
        continue;
      }
      push(TokenKind::String, std::move(value), start, line, column);
      continue;
    }

    if (c == '@') {
      cur.advance();
      if (!ident_start(cur.peek())) {
        error_at(line, column, "expected annotation key after '@'");
        continue;
      }
      std::size_t key_start = cur.pos;
      while (!cur.done() && ident_char(cur.peek())) cur.advance();
      push(TokenKind::AnnotationKey, text.substr(key_start, cur.pos - key_start), start,
           line, column);
      continue;
    }

    static const std::array<const char*, 6> two_char = {"->", "=>", "==", "!=", "<=", ">="};
    bool matched = false;
    for (const char* op : two_char) {
      if (c == op[0] && cur.peek(1) == op[1]) {
        cur.advance();
        cur.advance();
        push(TokenKind::Punct, op, start, line, column);
        matched = true;
        break;
      }
    }
    if (matched) continue;

    static const std::string single = "{}()[]:;,.?!=<>+-*/";
    if (single.find(c) != std::string::npos) {
      cur.advance();
      push(TokenKind::Punct, std::string(1, c), start, line, column);
      continue;
    }

    std::ostringstream msg;
    msg << "unexpected character '" << c << "'";
    error_at(line, column, msg.str());
    cur.advance();
  }

  Token eof;
  eof.kind = TokenKind::EndOfFile;
  eof.offset = text.size();
  eof.length = 0;
  eof.line = cur.line;
  eof.column = cur.column;
  result.tokens.push_back(std::move(eof));
  return result;
}

}  // namespace mdml
