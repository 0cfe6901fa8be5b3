#include "mdml/conv/carray.hpp"

#include <cctype>
#include <cstdio>

namespace mdml::conv {

std::string emit_carray(const std::vector<std::uint8_t>& data, const std::string& symbol) {
  std::string out;
  out.reserve(carray_size_bytes(data.size(), symbol));
  out += "unsigned char ";
  out += symbol;
  out += "[] = {\n";
  char buf[8];
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (i % 12 == 0) out += "  ";
    std::snprintf(buf, sizeof buf, "0x%02x", data[i]);
    out += buf;
    if (i + 1 == data.size())
      out += "\n";
    else
      out += (i % 12 == 11) ? ",\n" : ", ";
  }
  out += "};\n";
  out += "unsigned int ";
  out += symbol;
  out += "_len = ";
  out += std::to_string(data.size());
  out += ";\n";
  return out;
}

std::uint64_t carray_size_bytes(std::uint64_t payload_bytes, const std::string& symbol) {
  std::uint64_t size = 21 + symbol.size();  // "unsigned char s[] = {\n"
  if (payload_bytes > 0) {
    std::uint64_t full = payload_bytes / 12;
    std::uint64_t rem = payload_bytes % 12;
    if (rem == 0) {
      --full;
      rem = 12;
    }
    size += full * 74;      // "  " + 12 bytes + separators + ",\n"
    size += 6 * rem + 1;    // last line has no trailing comma
  }
  size += 3;  // "};\n"
  size += 22 + symbol.size() + std::to_string(payload_bytes).size();
  return size;
}

namespace {

struct Cursor {
  const std::string& text;
  std::size_t pos = 0;
  std::size_t line = 1;

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) {
      if (text[pos] == '\n') ++line;
      ++pos;
    }
  }

  bool word(const char* expected) {
    skip_ws();
    std::size_t n = std::char_traits<char>::length(expected);
    if (text.compare(pos, n, expected) != 0) return false;
    pos += n;
    return true;
  }

  std::string ident() {
    skip_ws();
    std::size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
      ++pos;
    return text.substr(start, pos - start);
  }

  bool at_end() {
    skip_ws();
    return pos >= text.size();
  }
};

std::optional<std::vector<std::uint8_t>> fail(std::string* error, const std::string& msg) {
  if (error) *error = msg;
  return std::nullopt;
}

std::string at_line(const Cursor& c, const std::string& msg) {
  return "line " + std::to_string(c.line) + ": " + msg;
}

}  // namespace

std::optional<std::vector<std::uint8_t>> parse_carray(const std::string& text,
                                                      std::string* symbol,
                                                      std::string* error) {
  Cursor c{text};

  if (!c.word("unsigned") || !c.word("char"))
    return fail(error, at_line(c, "expected 'unsigned char'"));
  std::string name = c.ident();
  if (name.empty()) return fail(error, at_line(c, "expected an array name"));
  if (!c.word("[") || !c.word("]") || !c.word("=") || !c.word("{"))
    return fail(error, at_line(c, "expected '[] = {' after the array name"));

  std::vector<std::uint8_t> data;
  c.skip_ws();
  while (c.pos < text.size() && text[c.pos] != '}') {
    if (text.compare(c.pos, 2, "0x") != 0 && text.compare(c.pos, 2, "0X") != 0)
      return fail(error, at_line(c, "expected a hex byte"));
    c.pos += 2;
    unsigned value = 0;
    std::size_t digits = 0;
    while (c.pos < text.size() &&
           std::isxdigit(static_cast<unsigned char>(text[c.pos]))) {
      char d = text[c.pos];
      unsigned nibble = d <= '9' ? unsigned(d - '0') : unsigned((d | 0x20) - 'a' + 10);
      value = value * 16 + nibble;
      ++digits;
      ++c.pos;
      if (value > 0xff) return fail(error, at_line(c, "byte value out of range"));
    }
    if (digits == 0) return fail(error, at_line(c, "expected a hex byte"));
    data.push_back(static_cast<std::uint8_t>(value));
    c.skip_ws();
    if (c.pos < text.size() && text[c.pos] == ',') {
      ++c.pos;
      c.skip_ws();
    } else if (c.pos >= text.size() || text[c.pos] != '}') {
      return fail(error, at_line(c, "expected ',' or '}'"));
    }
  }
  if (!c.word("}") || !c.word(";"))
    return fail(error, at_line(c, "expected '};' after the bytes"));

  if (!c.word("unsigned") || !c.word("int"))
    return fail(error, at_line(c, "expected the 'unsigned int' length line"));
  std::string len_name = c.ident();
  if (len_name != name + "_len")
    return fail(error, "length symbol '" + len_name + "' does not match array symbol '" +
                           name + "'");
  if (!c.word("=")) return fail(error, at_line(c, "expected '=' in the length line"));
  c.skip_ws();
  std::uint64_t declared = 0;
  std::size_t digits = 0;
  while (c.pos < text.size() && std::isdigit(static_cast<unsigned char>(text[c.pos]))) {
    declared = declared * 10 + std::uint64_t(text[c.pos] - '0');
    ++digits;
    ++c.pos;
  }
  if (digits == 0) return fail(error, at_line(c, "expected the declared length"));
  if (!c.word(";")) return fail(error, at_line(c, "expected ';' after the length"));
  if (!c.at_end()) return fail(error, at_line(c, "unexpected trailing characters"));

  if (declared != data.size())
    return fail(error, "declared length " + std::to_string(declared) + " does not match " +
                           std::to_string(data.size()) + " payload bytes");

  if (symbol) *symbol = name;
  return data;
}

}  // namespace mdml::conv
