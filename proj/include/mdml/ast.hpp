#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mdml/diagnostics.hpp"

namespace mdml {

// Base for AST nodes carrying a source location. The location never takes
// part in structural equality: a parsed model and an equivalent in-memory
// model compare equal.
struct Located {
  SourceLocation loc;
  bool operator==(const Located&) const { return true; }
};

using Value = std::variant<std::monostate, std::int64_t, double, bool, std::string>;

enum class ScalarType { Int, Long, Float, Double, Bool, String };

const char* scalar_type_name(ScalarType t);
std::optional<ScalarType> scalar_type_from_name(const std::string& name);
bool is_numeric(ScalarType t);

struct TypeRef : Located {
  ScalarType scalar = ScalarType::Int;
  // Engaged for array types; 0 means unsized ("Double[]").
  std::optional<std::uint32_t> array_len;

  bool is_array() const { return array_len.has_value(); }
  // Number of scalar slots this type occupies as an ML feature.
  std::uint32_t width() const { return array_len ? *array_len : 1u; }
  bool operator==(const TypeRef&) const = default;
};

// An @key value annotation. `target` is only set on model-level annotations
// carrying an `on <path>` clause; otherwise attachment is positional.
struct Annotation : Located {
  std::string key;
  std::string value;
  std::string target;
  bool operator==(const Annotation&) const = default;
};

enum class ExprKind { Literal, Ref, Unary, Binary };

// Guard / action expressions: literals, property or message-param
// references, comparisons, arithmetic and and/or/not.
struct Expr : Located {
  ExprKind kind = ExprKind::Literal;
  Value literal;             // Literal
  std::string name;          // Ref name, or operator symbol for Unary/Binary
  std::vector<Expr> args;    // operands

  static Expr make_literal(Value v);
  static Expr make_ref(std::string name);
  static Expr make_unary(std::string op, Expr operand);
  static Expr make_binary(std::string op, Expr lhs, Expr rhs);
  bool operator==(const Expr&) const = default;
};

struct Property : Located {
  std::string name;
  TypeRef type;
  std::optional<Value> init;
  std::vector<Annotation> annotations;
  bool operator==(const Property&) const = default;
};

struct Param : Located {
  std::string name;
  TypeRef type;
  bool operator==(const Param&) const = default;
};

struct Message : Located {
  std::string name;
  std::vector<Param> params;
  std::vector<Annotation> annotations;
  bool operator==(const Message&) const = default;
};

enum class PortDirection { Provided, Required };

struct Port : Located {
  std::string name;
  PortDirection direction = PortDirection::Provided;
  std::vector<std::string> sends;
  std::vector<std::string> receives;
  std::vector<Annotation> annotations;
  bool operator==(const Port&) const = default;
};

struct Action : Located {
  enum class Kind { Send, SetProperty };
  Kind kind = Kind::Send;
  // Send
  std::string port;
  std::string message;
  std::vector<Expr> args;
  // SetProperty
  std::string property;
  std::optional<Expr> value;
  bool operator==(const Action&) const = default;
};

struct State : Located {
  std::string name;
  std::vector<Action> on_entry;
  bool operator==(const State&) const = default;
};

struct Trigger : Located {
  std::string port;
  std::string message;
  bool operator==(const Trigger&) const = default;
};

struct Transition : Located {
  std::string source;
  std::string target;
  Trigger trigger;
  std::optional<Expr> guard;
  std::vector<Action> actions;
  bool operator==(const Transition&) const = default;

  std::string describe() const;  // "S0 -> S1 event P?m"
};

struct Statechart : Located {
  std::string name;
  std::string initial;
  std::vector<State> states;
  std::vector<Transition> transitions;
  bool operator==(const Statechart&) const = default;

  const State* find_state(const std::string& name) const;
};

enum class LabelsMode { On, Off, Semi };
enum class OnOff { On, Off };

const char* labels_mode_name(LabelsMode m);

struct Hyperparameter : Located {
  std::string name;
  std::vector<Value> values;
  bool operator==(const Hyperparameter&) const = default;
};

struct DataAnalyticsSpec : Located {
  std::string name;
  LabelsMode labels = LabelsMode::On;
  std::vector<std::string> features;
  std::string prediction_results;
  bool sequential = false;
  OnOff timestamps = OnOff::Off;
  std::string algorithm;
  std::vector<Hyperparameter> hyperparameters;
  std::string training_results;
  std::string dataset;
  bool operator==(const DataAnalyticsSpec&) const = default;

  const Hyperparameter* find_hyperparameter(const std::string& name) const;
};

struct Thing : Located {
  std::string name;
  std::vector<Property> properties;
  std::vector<Message> messages;
  std::vector<Port> ports;
  std::optional<Statechart> statechart;
  std::optional<DataAnalyticsSpec> analytics;
  std::vector<Annotation> annotations;
  bool operator==(const Thing&) const = default;

  const Property* find_property(const std::string& name) const;
  const Message* find_message(const std::string& name) const;
  const Port* find_port(const std::string& name) const;
};

struct Instance : Located {
  std::string name;
  std::string thing;
  std::vector<Annotation> annotations;
  bool operator==(const Instance&) const = default;
};

struct ConnectorEnd : Located {
  std::string instance;
  std::string port;
  bool operator==(const ConnectorEnd&) const = default;
};

struct Connector : Located {
  ConnectorEnd from;
  ConnectorEnd to;
  bool operator==(const Connector&) const = default;
};

struct Configuration : Located {
  std::string name;
  std::vector<Instance> instances;
  std::vector<Connector> connectors;
  std::vector<Annotation> annotations;
  bool operator==(const Configuration&) const = default;

  const Instance* find_instance(const std::string& name) const;
  // First @compiler annotation value, empty if none.
  std::string compiler_target() const;
};

enum class ModelKind { Pim, Psm };

struct SourceModel {
  std::vector<std::string> imports;
  std::vector<Thing> things;
  std::vector<Configuration> configurations;
  std::vector<Annotation> annotations;  // model-level, may carry `on` targets
  bool operator==(const SourceModel&) const = default;

  // A model is a PSM iff it declares at least one configuration.
  ModelKind kind() const {
    return configurations.empty() ? ModelKind::Pim : ModelKind::Psm;
  }
  const Thing* find_thing(const std::string& name) const;
  const Configuration* find_configuration(const std::string& name) const;
};

std::string value_to_source(const Value& v);

}  // namespace mdml
