#include "mdml/simulate.hpp"

#include <map>
#include <optional>
#include <sstream>
#include <utility>

namespace mdml {

std::string EmittedMessage::to_string() const {
  std::ostringstream out;
  out << port << "!" << message << "(";
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out << ", ";
    out << value_to_source(args[i]);
  }
  out << ")";
  return out.str();
}

namespace {

using Env = std::map<std::string, Value>;

Value default_value(const TypeRef& type) {
  if (type.array_len) return Value{};
  switch (type.scalar) {
    case ScalarType::Int:
    case ScalarType::Long:
      return Value{int64_t{0}};
    case ScalarType::Float:
    case ScalarType::Double:
      return Value{0.0};
    case ScalarType::Bool:
      return Value{false};
    case ScalarType::String:
      return Value{std::string{}};
  }
  return Value{};
}

bool is_number(const Value& v) {
  return std::holds_alternative<int64_t>(v) || std::holds_alternative<double>(v);
}

double as_double(const Value& v) {
  if (const auto* i = std::get_if<int64_t>(&v)) return static_cast<double>(*i);
  return std::get<double>(v);
}

// Expression evaluator over an environment of properties and message params.
// The first failure sticks; callers check error() after eval.
class Evaluator {
 public:
  explicit Evaluator(const Env& env) : env_(env) {}

  std::optional<Value> eval(const Expr& e) {
    if (!error_.empty()) return std::nullopt;
    switch (e.kind) {
      case ExprKind::Literal:
        return e.literal;
      case ExprKind::Ref: {
        auto it = env_.find(e.name);
        if (it == env_.end()) return fail("unknown name '" + e.name + "'");
        if (std::holds_alternative<std::monostate>(it->second))
          return fail("'" + e.name + "' has no scalar value");
        return it->second;
      }
      case ExprKind::Unary:
        return eval_unary(e);
      case ExprKind::Binary:
        return eval_binary(e);
    }
    return fail("malformed expression");
  }

  const std::string& error() const { return error_; }

 private:
  std::optional<Value> fail(const std::string& msg) {
    if (error_.empty()) error_ = msg;
    return std::nullopt;
  }

  std::optional<Value> eval_unary(const Expr& e) {
    auto v = eval(e.args[0]);
    if (!v) return std::nullopt;
    if (e.name == "not") {
      if (const auto* b = std::get_if<bool>(&*v)) return Value{!*b};
      return fail("'not' applied to a non-boolean value");
    }
    if (e.name == "-") {
      if (const auto* i = std::get_if<int64_t>(&*v)) return Value{-*i};
      if (const auto* d = std::get_if<double>(&*v)) return Value{-*d};
      return fail("unary '-' applied to a non-numeric value");
    }
    return fail("unknown unary operator '" + e.name + "'");
  }

  std::optional<Value> eval_binary(const Expr& e) {
    const std::string& op = e.name;
    if (op == "and" || op == "or") {
      auto l = eval(e.args[0]);
      if (!l) return std::nullopt;
      const auto* lb = std::get_if<bool>(&*l);
      if (!lb) return fail("'" + op + "' applied to a non-boolean value");
      // Short-circuit, but the dropped operand can no longer fail anyway.
      if (op == "and" && !*lb) return Value{false};
      if (op == "or" && *lb) return Value{true};
      auto r = eval(e.args[1]);
      if (!r) return std::nullopt;
      const auto* rb = std::get_if<bool>(&*r);
      if (!rb) return fail("'" + op + "' applied to a non-boolean value");
      return Value{*rb};
    }

    auto l = eval(e.args[0]);
    auto r = eval(e.args[1]);
    if (!l || !r) return std::nullopt;

    if (op == "==" || op == "!=") {
      auto eq = value_equals(*l, *r);
      if (!eq) return std::nullopt;
      return Value{op == "==" ? *eq : !*eq};
    }
    if (op == "<" || op == "<=" || op == ">" || op == ">=")
      return compare(op, *l, *r);
    if (op == "+" || op == "-" || op == "*" || op == "/")
      return arith(op, *l, *r);
    return fail("unknown operator '" + op + "'");
  }

  std::optional<bool> value_equals(const Value& l, const Value& r) {
    if (is_number(l) && is_number(r)) {
      if (std::holds_alternative<int64_t>(l) && std::holds_alternative<int64_t>(r))
        return std::get<int64_t>(l) == std::get<int64_t>(r);
      return as_double(l) == as_double(r);
    }
    if (l.index() != r.index()) {
      fail("'==' between incompatible types");
      return std::nullopt;
    }
    return l == r;
  }

  std::optional<Value> compare(const std::string& op, const Value& l, const Value& r) {
    int cmp = 0;
    if (is_number(l) && is_number(r)) {
      double a = as_double(l), b = as_double(r);
      cmp = a < b ? -1 : (a > b ? 1 : 0);
    } else if (std::holds_alternative<std::string>(l) &&
               std::holds_alternative<std::string>(r)) {
      const auto& a = std::get<std::string>(l);
      const auto& b = std::get<std::string>(r);
      cmp = a < b ? -1 : (a > b ? 1 : 0);
    } else {
      return fail("'" + op + "' requires two numbers or two strings");
    }
    if (op == "<") return Value{cmp < 0};
    if (op == "<=") return Value{cmp <= 0};
    if (op == ">") return Value{cmp > 0};
    return Value{cmp >= 0};
  }

  std::optional<Value> arith(const std::string& op, const Value& l, const Value& r) {
    if (!is_number(l) || !is_number(r))
      return fail("'" + op + "' requires numeric operands");
    if (std::holds_alternative<int64_t>(l) && std::holds_alternative<int64_t>(r)) {
      int64_t a = std::get<int64_t>(l), b = std::get<int64_t>(r);
      if (op == "+") return Value{a + b};
      if (op == "-") return Value{a - b};
      if (op == "*") return Value{a * b};
      if (b == 0) return fail("division by zero");
      return Value{a / b};
    }
    double a = as_double(l), b = as_double(r);
    if (op == "+") return Value{a + b};
    if (op == "-") return Value{a - b};
    if (op == "*") return Value{a * b};
    return Value{a / b};
  }

  const Env& env_;
  std::string error_;
};

class Simulator {
 public:
  Simulator(const Thing& thing, const std::vector<Event>& events)
      : thing_(thing), events_(events) {}

  SimulationResult run() {
    SimulationResult result;
    if (!thing_.statechart) {
      result.errors.push_back(Diagnostic{Severity::Error, "thing " + thing_.name,
                                         "thing has no statechart", thing_.loc});
      return result;
    }
    const Statechart& chart = *thing_.statechart;

    for (const auto& p : thing_.properties)
      env_[p.name] = p.init ? *p.init : default_value(p.type);

    current_ = chart.initial;
    result.trace.states.push_back(current_);
    const State* init = chart.find_state(chart.initial);
    if (init && !run_actions(init->on_entry, Env{}, "state " + init->name,
                             init->loc, result))
      return result;

    for (const auto& event : events_) {
      const Transition* fired = nullptr;
      Env params;
      for (const auto& tr : chart.transitions) {
        if (tr.source != current_) continue;
        if (tr.trigger.port != event.port || tr.trigger.message != event.message)
          continue;
        Env candidate = bind_params(event);
        if (tr.guard) {
          Env scope = env_;
          scope.insert(candidate.begin(), candidate.end());
          Evaluator ev(scope);
          auto v = ev.eval(*tr.guard);
          if (!v) {
            fail(result, "transition " + tr.describe(),
                 "guard evaluation failed: " + ev.error(), tr.loc);
            return result;
          }
          const auto* b = std::get_if<bool>(&*v);
          if (!b) {
            fail(result, "transition " + tr.describe(),
                 "guard evaluation failed: guard is not boolean", tr.loc);
            return result;
          }
          if (!*b) continue;
        }
        fired = &tr;
        params = std::move(candidate);
        break;
      }
      if (!fired) continue;  // unmatched events are dropped

      if (!run_actions(fired->actions, params, "transition " + fired->describe(),
                       fired->loc, result))
        return result;
      current_ = fired->target;
      result.trace.states.push_back(current_);
      result.trace.steps++;
      const State* target = chart.find_state(current_);
      if (target && !run_actions(target->on_entry, params, "state " + target->name,
                                 target->loc, result))
        return result;
    }
    return result;
  }

 private:
  void fail(SimulationResult& result, const std::string& node, const std::string& message,
            const SourceLocation& loc) {
    result.errors.push_back(Diagnostic{Severity::Error, node, message, loc});
  }

  Env bind_params(const Event& event) const {
    Env params;
    const Message* msg = thing_.find_message(event.message);
    if (!msg) return params;
    for (std::size_t i = 0; i < msg->params.size() && i < event.args.size(); ++i)
      params[msg->params[i].name] = event.args[i];
    return params;
  }

  bool run_actions(const std::vector<Action>& actions, const Env& params,
                   const std::string& node, const SourceLocation& loc,
                   SimulationResult& result) {
    for (const auto& action : actions) {
      Env scope = env_;
      scope.insert(params.begin(), params.end());
      Evaluator ev(scope);
      if (action.kind == Action::Kind::Send) {
        EmittedMessage out{action.port, action.message, {}};
        for (const auto& arg : action.args) {
          auto v = ev.eval(arg);
          if (!v) {
            fail(result, node, "action evaluation failed: " + ev.error(), loc);
            return false;
          }
          out.args.push_back(*v);
        }
        result.trace.emitted.push_back(std::move(out));
      } else {
        if (env_.find(action.property) == env_.end()) {
          fail(result, node, "set of undeclared property '" + action.property + "'", loc);
          return false;
        }
        auto v = ev.eval(*action.value);
        if (!v) {
          fail(result, node, "action evaluation failed: " + ev.error(), loc);
          return false;
        }
        env_[action.property] = *v;
      }
    }
    return true;
  }

  const Thing& thing_;
  const std::vector<Event>& events_;
  Env env_;
  std::string current_;
};

}  // namespace

SimulationResult simulate_statechart(const Thing& thing, const std::vector<Event>& events) {
  return Simulator(thing, events).run();
}

}  // namespace mdml
