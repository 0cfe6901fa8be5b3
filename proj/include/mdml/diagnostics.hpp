#pragma once

#include <string>
#include <vector>

namespace mdml {

enum class Severity { Error, Warning, Note };

struct SourceLocation {
  std::string file;
  int line = 0;  // 1-based; 0 = unknown
  int column = 0;

  bool valid() const { return line > 0 && column > 0; }
  std::string to_string() const;
};

// One finding from validation, linking or semantic analysis. The `node`
// field is a human-readable model path ("thing Sensor/port comm").
struct Diagnostic {
  Severity severity = Severity::Error;
  std::string node;
  std::string message;
  SourceLocation location;

  std::string to_string() const;
};

const char* severity_name(Severity s);

bool has_errors(const std::vector<Diagnostic>& diags);

}  // namespace mdml
