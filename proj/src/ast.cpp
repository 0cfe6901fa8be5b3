#include "mdml/ast.hpp"

#include <charconv>
#include <sstream>

namespace mdml {

const char* scalar_type_name(ScalarType t) {
  switch (t) {
    case ScalarType::Int: return "Int";
    case ScalarType::Long: return "Long";
    case ScalarType::Float: return "Float";
    case ScalarType::Double: return "Double";
    case ScalarType::Bool: return "Bool";
    case ScalarType::String: return "String";
  }
  return "Int";
}

std::optional<ScalarType> scalar_type_from_name(const std::string& name) {
  if (name == "Int") return ScalarType::Int;
  if (name == "Long") return ScalarType::Long;
  if (name == "Float") return ScalarType::Float;
  if (name == "Double") return ScalarType::Double;
  if (name == "Bool") return ScalarType::Bool;
  if (name == "String") return ScalarType::String;
  return std::nullopt;
}

bool is_numeric(ScalarType t) {
  return t == ScalarType::Int || t == ScalarType::Long || t == ScalarType::Float ||
         t == ScalarType::Double;
}

const char* labels_mode_name(LabelsMode m) {
  switch (m) {
    case LabelsMode::On: return "ON";
    case LabelsMode::Off: return "OFF";
    case LabelsMode::Semi: return "SEMI";
  }
  return "ON";
}

Expr Expr::make_literal(Value v) {
  Expr e;
  e.kind = ExprKind::Literal;
  e.literal = std::move(v);
  return e;
}

Expr Expr::make_ref(std::string name) {
  Expr e;
  e.kind = ExprKind::Ref;
  e.name = std::move(name);
  return e;
}

Expr Expr::make_unary(std::string op, Expr operand) {
  Expr e;
  e.kind = ExprKind::Unary;
  e.name = std::move(op);
  e.args.push_back(std::move(operand));
  return e;
}

Expr Expr::make_binary(std::string op, Expr lhs, Expr rhs) {
  Expr e;
  e.kind = ExprKind::Binary;
  e.name = std::move(op);
  e.args.push_back(std::move(lhs));
  e.args.push_back(std::move(rhs));
  return e;
}

std::string Transition::describe() const {
  std::ostringstream out;
  out << source << " -> " << target << " event " << trigger.port << "?" << trigger.message;
  return out.str();
}

const State* Statechart::find_state(const std::string& name) const {
  for (const auto& s : states)
    if (s.name == name) return &s;
  return nullptr;
}

const Hyperparameter* DataAnalyticsSpec::find_hyperparameter(const std::string& name) const {
  for (const auto& h : hyperparameters)
    if (h.name == name) return &h;
  return nullptr;
}

const Property* Thing::find_property(const std::string& name) const {
  for (const auto& p : properties)
    if (p.name == name) return &p;
  return nullptr;
}

const Message* Thing::find_message(const std::string& name) const {
  for (const auto& m : messages)
    if (m.name == name) return &m;
  return nullptr;
}

const Port* Thing::find_port(const std::string& name) const {
  for (const auto& p : ports)
    if (p.name == name) return &p;
  return nullptr;
}

const Instance* Configuration::find_instance(const std::string& name) const {
  for (const auto& i : instances)
    if (i.name == name) return &i;
  return nullptr;
}

std::string Configuration::compiler_target() const {
  for (const auto& a : annotations)
    if (a.key == "compiler") return a.value;
  return {};
}

const Thing* SourceModel::find_thing(const std::string& name) const {
  for (const auto& t : things)
    if (t.name == name) return &t;
  return nullptr;
}

const Configuration* SourceModel::find_configuration(const std::string& name) const {
  for (const auto& c : configurations)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

std::string double_to_source(double d) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), d);
  std::string s(buf, res.ptr);
  // Keep floats visually distinct from ints so they re-lex as Float tokens.
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos && s.find("nan") == std::string::npos) {
    s += ".0";
  }
  return s;
}

}  // namespace

std::string value_to_source(const Value& v) {
  std::ostringstream out;
  if (std::holds_alternative<std::int64_t>(v)) {
    out << std::get<std::int64_t>(v);
  } else if (std::holds_alternative<double>(v)) {
    out << double_to_source(std::get<double>(v));
  } else if (std::holds_alternative<bool>(v)) {
    out << (std::get<bool>(v) ? "true" : "false");
  } else if (std::holds_alternative<std::string>(v)) {
    out << '"';
    for (char c : std::get<std::string>(v)) {
      switch (c) {
        case '"': out << "\\\""; break;
        case '\\': out << "\\\\"; break;
        case '\n': out << "\\n"; break;
        case '\t': out << "\\t"; break;
        case '\r': out << "\\r"; break;
        default: out << c;
      }
    }
    out << '"';
  }
  return out.str();
}

}  // namespace mdml
