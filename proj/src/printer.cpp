#include "mdml/printer.hpp"

#include <cctype>
#include <sstream>

#include "mdml/token.hpp"

namespace mdml {

namespace {

int precedence(const std::string& op) {
  if (op == "or") return 1;
  if (op == "and") return 2;
  if (op == "not") return 3;
  if (op == "==" || op == "!=" || op == "<" || op == "<=" || op == ">" || op == ">=")
    return 4;
  if (op == "+" || op == "-") return 5;
  if (op == "*" || op == "/") return 6;
  return 7;
}

void print_expr(std::ostringstream& out, const Expr& e, int parent_prec) {
  switch (e.kind) {
    case ExprKind::Literal:
      out << value_to_source(e.literal);
      return;
    case ExprKind::Ref:
      out << e.name;
      return;
    case ExprKind::Unary: {
      int prec = e.name == "not" ? precedence("not") : 7;
      bool parens = prec < parent_prec;
      if (parens) out << "(";
      out << e.name << (e.name == "not" ? " " : "");
      print_expr(out, e.args[0], prec + 1);
      if (parens) out << ")";
      return;
    }
    case ExprKind::Binary: {
      int prec = precedence(e.name);
      bool parens = prec < parent_prec;
      // Comparisons don't chain in the grammar, so a comparison operand of a
      // comparison needs explicit parens on both sides.
      int lhs_prec = prec == 4 ? prec + 1 : prec;
      if (parens) out << "(";
      print_expr(out, e.args[0], lhs_prec);
      out << " " << e.name << " ";
      print_expr(out, e.args[1], prec + 1);
      if (parens) out << ")";
      return;
    }
  }
}

bool identifier_shaped(const std::string& s) {
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return !is_keyword_word(s);
}

// Mirrors the lexer's number token exactly: [0-9]+ (. [0-9]+)? ([eE][+-]?[0-9]+)?
bool number_shaped(const std::string& s) {
  std::size_t i = 0;
  auto digits = [&] {
    std::size_t begin = i;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
    return i > begin;
  };
  if (!digits()) return false;
  if (i < s.size() && s[i] == '.') {
    ++i;
    if (!digits()) return false;
  }
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    ++i;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
    if (!digits()) return false;
  }
  return i == s.size();
}

std::string quote(const std::string& s) { return value_to_source(Value{s}); }

std::string annotation_to_source(const Annotation& a) {
  std::ostringstream out;
  out << "@" << a.key;
  if (!a.value.empty()) {
    out << " ";
    if (identifier_shaped(a.value) || number_shaped(a.value)) {
      out << a.value;
    } else {
      out << quote(a.value);
    }
  }
  if (!a.target.empty()) out << " on " << a.target;
  return out.str();
}

std::string type_to_source(const TypeRef& t) {
  std::ostringstream out;
  out << scalar_type_name(t.scalar);
  if (t.array_len) {
    out << "[";
    if (*t.array_len > 0) out << *t.array_len;
    out << "]";
  }
  return out.str();
}

class Printer {
 public:
  std::string print(const SourceModel& model) {
    bool first = true;
    auto separator = [&] {
      if (!first) out_ << "\n";
      first = false;
    };
    if (!model.imports.empty()) {
      separator();
      for (const auto& imp : model.imports) out_ << "import " << quote(imp) << "\n";
    }
    if (!model.annotations.empty()) {
      separator();
      for (const auto& a : model.annotations) out_ << annotation_to_source(a) << "\n";
    }
    for (const auto& thing : model.things) {
      separator();
      print_thing(thing);
    }
    for (const auto& conf : model.configurations) {
      separator();
      print_configuration(conf);
    }
    return out_.str();
  }

 private:
  void indent() {
    for (int i = 0; i < depth_; ++i) out_ << "  ";
  }
  void line(const std::string& text) {
    indent();
    out_ << text << "\n";
  }

  void print_annotation_lines(const std::vector<Annotation>& anns) {
    for (const auto& a : anns) line(annotation_to_source(a));
  }

  static std::string inline_annotations(const std::vector<Annotation>& anns) {
    std::string out;
    for (const auto& a : anns) out += " " + annotation_to_source(a);
    return out;
  }

  void print_thing(const Thing& thing) {
    line("thing " + thing.name + " {");
    ++depth_;
    print_annotation_lines(thing.annotations);
    for (const auto& p : thing.properties) {
      std::ostringstream decl;
      decl << "property " << p.name << " : " << type_to_source(p.type);
      if (p.init) decl << " = " << value_to_source(*p.init);
      decl << inline_annotations(p.annotations) << ";";
      line(decl.str());
    }
    for (const auto& m : thing.messages) {
      std::ostringstream decl;
      decl << "message " << m.name << "(";
      for (std::size_t i = 0; i < m.params.size(); ++i) {
        if (i) decl << ", ";
        decl << m.params[i].name << " : " << type_to_source(m.params[i].type);
      }
      decl << ")" << inline_annotations(m.annotations) << ";";
      line(decl.str());
    }
    for (const auto& port : thing.ports) print_port(port);
    if (thing.statechart) print_statechart(*thing.statechart);
    if (thing.analytics) print_analytics(*thing.analytics);
    --depth_;
    line("}");
  }

  void print_port(const Port& port) {
    std::ostringstream head;
    head << (port.direction == PortDirection::Provided ? "provided" : "required")
         << " port " << port.name << inline_annotations(port.annotations) << " {";
    line(head.str());
    ++depth_;
    if (!port.receives.empty()) line("receives " + join(port.receives));
    if (!port.sends.empty()) line("sends " + join(port.sends));
    --depth_;
    line("}");
  }

  static std::string join(const std::vector<std::string>& names) {
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (i) out += ", ";
      out += names[i];
    }
    return out;
  }

  void print_statechart(const Statechart& chart) {
    line("statechart " + chart.name + " init " + chart.initial + " {");
    ++depth_;
    for (const auto& state : chart.states) {
      if (state.on_entry.empty()) {
        line("state " + state.name + " {}");
        continue;
      }
      line("state " + state.name + " {");
      ++depth_;
      for (const auto& action : state.on_entry) line("on entry " + action_to_source(action));
      --depth_;
      line("}");
    }
    for (const auto& tr : chart.transitions) {
      std::ostringstream decl;
      decl << "transition " << tr.source << " -> " << tr.target << " event "
           << tr.trigger.port << "?" << tr.trigger.message;
      if (tr.guard) decl << " guard " << expr_to_source(*tr.guard);
      if (tr.actions.empty()) {
        line(decl.str());
      } else {
        decl << " {";
        line(decl.str());
        ++depth_;
        for (const auto& action : tr.actions) line(action_to_source(action));
        --depth_;
        line("}");
      }
    }
    --depth_;
    line("}");
  }

  void print_analytics(const DataAnalyticsSpec& spec) {
    line("data_analytics " + spec.name + " {");
    ++depth_;
    line(std::string("labels ") + labels_mode_name(spec.labels));
    if (!spec.features.empty()) line("features " + join(spec.features));
    if (!spec.prediction_results.empty()) line("prediction_results " + spec.prediction_results);
    line(std::string("sequential ") + (spec.sequential ? "true" : "false"));
    line(std::string("timestamps ") + (spec.timestamps == OnOff::On ? "ON" : "OFF"));
    if (!spec.algorithm.empty()) {
      std::ostringstream decl;
      decl << "model_algorithm " << spec.algorithm;
      if (!spec.hyperparameters.empty()) {
        decl << "(";
        for (std::size_t i = 0; i < spec.hyperparameters.size(); ++i) {
          if (i) decl << ", ";
          decl << spec.hyperparameters[i].name;
          for (const auto& v : spec.hyperparameters[i].values)
            decl << " " << value_to_source(v);
        }
        decl << ")";
      }
      line(decl.str());
    }
    if (!spec.training_results.empty()) line("training_results " + quote(spec.training_results));
    if (!spec.dataset.empty()) line("dataset " + quote(spec.dataset));
    --depth_;
    line("}");
  }

  void print_configuration(const Configuration& conf) {
    line("configuration " + conf.name + " {");
    ++depth_;
    print_annotation_lines(conf.annotations);
    for (const auto& inst : conf.instances) {
      std::ostringstream decl;
      decl << "instance " << inst.name << " : " << inst.thing
           << inline_annotations(inst.annotations) << ";";
      line(decl.str());
    }
    for (const auto& conn : conf.connectors) {
      std::ostringstream decl;
      decl << "connector " << conn.from.instance << "." << conn.from.port << " => "
           << conn.to.instance << "." << conn.to.port << ";";
      line(decl.str());
    }
    --depth_;
    line("}");
  }

  std::ostringstream out_;
  int depth_ = 0;
};

}  // namespace

std::string expr_to_source(const Expr& expr) {
  std::ostringstream out;
  print_expr(out, expr, 0);
  return out.str();
}

std::string action_to_source(const Action& action) {
  std::ostringstream out;
  if (action.kind == Action::Kind::Send) {
    out << "send " << action.port << "!" << action.message;
    if (!action.args.empty()) {
      out << "(";
      for (std::size_t i = 0; i < action.args.size(); ++i) {
        if (i) out << ", ";
        out << expr_to_source(action.args[i]);
      }
      out << ")";
    }
  } else {
    out << "set " << action.property << " = ";
    if (action.value) out << expr_to_source(*action.value);
  }
  return out.str();
}

std::string pretty_print(const SourceModel& model) { return Printer().print(model); }

}  // namespace mdml
