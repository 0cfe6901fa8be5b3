#include "mdml/diagnostics.hpp"

#include <algorithm>
#include <sstream>

namespace mdml {

const char* severity_name(Severity s) {
  switch (s) {
    case Severity::Error: return "error";
    case Severity::Warning: return "warning";
    case Severity::Note: return "note";
  }
  return "error";
}

std::string SourceLocation::to_string() const {
  std::ostringstream out;
  if (!file.empty()) out << file << ":";
  out << line << ":" << column;
  return out.str();
}

std::string Diagnostic::to_string() const {
  std::ostringstream out;
  if (location.valid() || !location.file.empty()) out << location.to_string() << ": ";
  out << severity_name(severity) << ": ";
  if (!node.empty()) out << node << ": ";
  out << message;
  return out.str();
}

bool has_errors(const std::vector<Diagnostic>& diags) {
  return std::any_of(diags.begin(), diags.end(), [](const Diagnostic& d) {
    return d.severity == Severity::Error;
  });
}

}  // namespace mdml
