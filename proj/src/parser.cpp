#include "mdml/parser.hpp"

#include <charconv>
#include <cstdlib>
#include <initializer_list>

#include "mdml/lexer.hpp"

namespace mdml {

namespace {

class Parser {
 public:
  Parser(std::vector<Token> tokens, std::string file, std::vector<ParseError> lex_errors)
      : tokens_(std::move(tokens)), file_(std::move(file)) {
    result_.errors = std::move(lex_errors);
  }

  ParseResult run() {
    while (!at_end()) {
      std::size_t before = pos_;
      parse_top_level();
      if (pos_ == before) advance();  // never loop without progress
    }
    return std::move(result_);
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = pos_ + ahead;
    return i < tokens_.size() ? tokens_[i] : tokens_.back();
  }
  const Token& advance() {
    const Token& t = peek();
    if (pos_ + 1 < tokens_.size()) ++pos_;
    return t;
  }
  bool at_end() const { return peek().kind == TokenKind::EndOfFile; }

  SourceLocation loc_of(const Token& t) const { return t.location(file_); }

  void error(std::vector<std::string> expected, const std::string& message = {}) {
    ParseError err;
    err.message = message.empty() ? "syntax error" : message;
    err.expected = std::move(expected);
    err.found = peek().describe();
    err.location = loc_of(peek());
    result_.errors.push_back(std::move(err));
  }

  bool expect_punct(const char* p) {
    if (peek().is_punct(p)) {
      advance();
      return true;
    }
    error({std::string("'") + p + "'"});
    return false;
  }

  bool expect_keyword(const char* kw) {
    if (peek().is_keyword(kw)) {
      advance();
      return true;
    }
    error({std::string("'") + kw + "'"});
    return false;
  }

  std::string expect_identifier(const char* what) {
    if (peek().kind == TokenKind::Identifier) return advance().lexeme;
    error({what});
    return {};
  }

  std::string expect_string(const char* what) {
    if (peek().kind == TokenKind::String) return advance().lexeme;
    error({what});
    return {};
  }

  void skip_semicolons() {
    while (peek().is_punct(";")) advance();
  }

  // Skips ahead to a statement boundary after an error.
  void synchronize(std::initializer_list<const char*> stop_keywords) {
    while (!at_end()) {
      if (peek().is_punct(";")) {
        advance();
        return;
      }
      if (peek().is_punct("}")) return;
      for (const char* kw : stop_keywords)
        if (peek().is_keyword(kw)) return;
      if (peek().kind == TokenKind::AnnotationKey) return;
      advance();
    }
  }

  // --- top level ------------------------------------------------------

  void parse_top_level() {
    skip_semicolons();
    if (at_end()) return;
    const Token& t = peek();
    if (t.is_keyword("import")) {
      advance();
      std::string path = expect_string("import path string");
      if (!path.empty()) result_.model.imports.push_back(path);
      skip_semicolons();
      return;
    }
    if (t.is_keyword("thing")) {
      parse_thing();
      return;
    }
    if (t.is_keyword("configuration")) {
      parse_configuration();
      return;
    }
    if (t.kind == TokenKind::AnnotationKey) {
      Annotation ann = parse_annotation();
      if (peek().is_keyword("on")) {
        advance();
        ann.target = parse_qualified_name();
      }
      result_.model.annotations.push_back(std::move(ann));
      skip_semicolons();
      return;
    }
    error({"'import'", "'thing'", "'configuration'", "annotation"});
    synchronize({"import", "thing", "configuration"});
  }

  std::string parse_qualified_name() {
    std::string name = expect_identifier("name");
    while (peek().is_punct(".")) {
      advance();
      name += ".";
      name += expect_identifier("name");
    }
    return name;
  }

  // `@key` with an optional value: string, bareword, number or bool.
  Annotation parse_annotation() {
    Annotation ann;
    ann.loc = loc_of(peek());
    ann.key = advance().lexeme;
    const Token& v = peek();
    if (v.kind == TokenKind::String || v.kind == TokenKind::Identifier ||
        v.kind == TokenKind::Integer || v.kind == TokenKind::Float) {
      ann.value = advance().lexeme;
    } else if (v.is_keyword("true") || v.is_keyword("false")) {
      ann.value = advance().lexeme;
    }
    return ann;
  }

  std::vector<Annotation> parse_inline_annotations() {
    std::vector<Annotation> anns;
    while (peek().kind == TokenKind::AnnotationKey) anns.push_back(parse_annotation());
    return anns;
  }

  // --- things ----------------------------------------------------------

  void parse_thing() {
    Thing thing;
    thing.loc = loc_of(peek());
    advance();  // 'thing'
    thing.name = expect_identifier("thing name");
    for (auto& a : parse_inline_annotations()) thing.annotations.push_back(std::move(a));
    if (!expect_punct("{")) {
      synchronize({"thing", "configuration", "import"});
      return;
    }
    while (!at_end() && !peek().is_punct("}")) {
      std::size_t before = pos_;
      parse_thing_member(thing);
      if (pos_ == before) advance();
    }
    expect_punct("}");
    result_.model.things.push_back(std::move(thing));
  }

  void parse_thing_member(Thing& thing) {
    skip_semicolons();
    const Token& t = peek();
    if (t.is_punct("}")) return;
    if (t.kind == TokenKind::AnnotationKey) {
      thing.annotations.push_back(parse_annotation());
      skip_semicolons();
      return;
    }
    if (t.is_keyword("property")) {
      parse_property(thing);
      return;
    }
    if (t.is_keyword("message")) {
      parse_message(thing);
      return;
    }
    if (t.is_keyword("port") || t.is_keyword("provided") || t.is_keyword("required")) {
      parse_port(thing);
      return;
    }
    if (t.is_keyword("statechart")) {
      parse_statechart(thing);
      return;
    }
    if (t.is_keyword("data_analytics")) {
      parse_data_analytics(thing);
      return;
    }
    error({"'property'", "'message'", "'port'", "'statechart'", "'data_analytics'",
           "annotation"});
    synchronize({"property", "message", "port", "provided", "required", "statechart",
                 "data_analytics"});
  }

  TypeRef parse_type() {
    TypeRef type;
    type.loc = loc_of(peek());
    std::string name = expect_identifier("type name");
    auto scalar = scalar_type_from_name(name);
    if (!scalar) {
      ParseError err;
      err.message = "unknown type '" + name + "'";
      err.expected = {"'Int'", "'Long'", "'Float'", "'Double'", "'Bool'", "'String'"};
      err.location = type.loc;
      result_.errors.push_back(std::move(err));
    } else {
      type.scalar = *scalar;
    }
    if (peek().is_punct("[")) {
      advance();
      if (peek().kind == TokenKind::Integer) {
        type.array_len = static_cast<std::uint32_t>(std::strtoull(
            advance().lexeme.c_str(), nullptr, 10));
      } else {
        type.array_len = 0;  // unsized array
      }
      expect_punct("]");
    }
    return type;
  }

  std::optional<Value> parse_literal_value() {
    const Token& t = peek();
    if (t.kind == TokenKind::Integer) {
      std::int64_t v = 0;
      std::from_chars(t.lexeme.data(), t.lexeme.data() + t.lexeme.size(), v);
      advance();
      return Value{v};
    }
    if (t.kind == TokenKind::Float) {
      double v = std::strtod(t.lexeme.c_str(), nullptr);
      advance();
      return Value{v};
    }
    if (t.is_punct("-")) {
      const Token& next = peek(1);
      if (next.kind == TokenKind::Integer) {
        advance();
        std::int64_t v = 0;
        std::from_chars(next.lexeme.data(), next.lexeme.data() + next.lexeme.size(), v);
        advance();
        return Value{-v};
      }
      if (next.kind == TokenKind::Float) {
        advance();
        double v = std::strtod(next.lexeme.c_str(), nullptr);
        advance();
        return Value{-v};
      }
      return std::nullopt;
    }
    if (t.kind == TokenKind::String) {
      advance();
      return Value{t.lexeme};
    }
    if (t.is_keyword("true")) {
      advance();
      return Value{true};
    }
    if (t.is_keyword("false")) {
      advance();
      return Value{false};
    }
    return std::nullopt;
  }

  void parse_property(Thing& thing) {
    Property prop;
    prop.loc = loc_of(peek());
    advance();  // 'property'
    prop.name = expect_identifier("property name");
    if (!expect_punct(":")) {
      synchronize({"property", "message", "port", "statechart", "data_analytics"});
      return;
    }
    prop.type = parse_type();
    if (peek().is_punct("=")) {
      advance();
      auto v = parse_literal_value();
      if (v) {
        prop.init = std::move(*v);
      } else {
        error({"literal value"});
      }
    }
    prop.annotations = parse_inline_annotations();
    skip_semicolons();
    thing.properties.push_back(std::move(prop));
  }

  void parse_message(Thing& thing) {
    Message msg;
    msg.loc = loc_of(peek());
    advance();  // 'message'
    msg.name = expect_identifier("message name");
    if (expect_punct("(")) {
      while (!at_end() && !peek().is_punct(")")) {
        Param param;
        param.loc = loc_of(peek());
        param.name = expect_identifier("parameter name");
        if (param.name.empty()) break;
        expect_punct(":");
        param.type = parse_type();
        msg.params.push_back(std::move(param));
        if (peek().is_punct(",")) {
          advance();
          continue;
        }
        break;
      }
      expect_punct(")");
    }
    msg.annotations = parse_inline_annotations();
    skip_semicolons();
    thing.messages.push_back(std::move(msg));
  }

  void parse_port(Thing& thing) {
    Port port;
    port.loc = loc_of(peek());
    if (peek().is_keyword("provided")) {
      advance();
    } else if (peek().is_keyword("required")) {
      port.direction = PortDirection::Required;
      advance();
    }
    if (!expect_keyword("port")) {
      synchronize({"property", "message", "port", "statechart", "data_analytics"});
      return;
    }
    port.name = expect_identifier("port name");
    port.annotations = parse_inline_annotations();
    if (!expect_punct("{")) return;
    while (!at_end() && !peek().is_punct("}")) {
      skip_semicolons();
      if (peek().is_keyword("receives")) {
        advance();
        parse_identifier_list(port.receives);
      } else if (peek().is_keyword("sends")) {
        advance();
        parse_identifier_list(port.sends);
      } else if (peek().is_punct("}")) {
        break;
      } else {
        error({"'receives'", "'sends'"});
        synchronize({});
      }
    }
    expect_punct("}");
    skip_semicolons();
    thing.ports.push_back(std::move(port));
  }

  void parse_identifier_list(std::vector<std::string>& out) {
    out.push_back(expect_identifier("message name"));
    while (peek().is_punct(",")) {
      advance();
      out.push_back(expect_identifier("message name"));
    }
    skip_semicolons();
  }

  // --- statecharts ------------------------------------------------------

  void parse_statechart(Thing& thing) {
    Statechart chart;
    chart.loc = loc_of(peek());
    advance();  // 'statechart'
    chart.name = expect_identifier("statechart name");
    expect_keyword("init");
    chart.initial = expect_identifier("initial state name");
    if (!expect_punct("{")) return;
    while (!at_end() && !peek().is_punct("}")) {
      std::size_t before = pos_;
      skip_semicolons();
      if (peek().is_keyword("state")) {
        parse_state(chart);
      } else if (peek().is_keyword("transition")) {
        parse_transition(chart);
      } else if (peek().is_punct("}")) {
        break;
      } else {
        error({"'state'", "'transition'"});
        synchronize({"state", "transition"});
      }
      if (pos_ == before) advance();
    }
    expect_punct("}");
    skip_semicolons();
    thing.statechart = std::move(chart);
  }

  void parse_state(Statechart& chart) {
    State state;
    state.loc = loc_of(peek());
    advance();  // 'state'
    state.name = expect_identifier("state name");
    if (!expect_punct("{")) return;
    while (!at_end() && !peek().is_punct("}")) {
      skip_semicolons();
      if (peek().is_punct("}")) break;
      if (peek().is_keyword("on")) {
        advance();
        expect_keyword("entry");
        auto action = parse_action();
        if (action) state.on_entry.push_back(std::move(*action));
      } else {
        error({"'on entry'"});
        synchronize({"state", "transition"});
        break;
      }
    }
    expect_punct("}");
    chart.states.push_back(std::move(state));
  }

  void parse_transition(Statechart& chart) {
    Transition tr;
    tr.loc = loc_of(peek());
    advance();  // 'transition'
    tr.source = expect_identifier("source state");
    expect_punct("->");
    tr.target = expect_identifier("target state");
    expect_keyword("event");
    tr.trigger.loc = loc_of(peek());
    tr.trigger.port = expect_identifier("port name");
    expect_punct("?");
    tr.trigger.message = expect_identifier("message name");
    if (peek().is_keyword("guard")) {
      advance();
      tr.guard = parse_expr();
    }
    if (peek().is_punct("{")) {
      advance();
      while (!at_end() && !peek().is_punct("}")) {
        skip_semicolons();
        if (peek().is_punct("}")) break;
        auto action = parse_action();
        if (!action) {
          synchronize({"state", "transition"});
          break;
        }
        tr.actions.push_back(std::move(*action));
      }
      expect_punct("}");
    }
    skip_semicolons();
    chart.transitions.push_back(std::move(tr));
  }

  std::optional<Action> parse_action() {
    Action action;
    action.loc = loc_of(peek());
    if (peek().is_keyword("send")) {
      advance();
      action.kind = Action::Kind::Send;
      action.port = expect_identifier("port name");
      expect_punct("!");
      action.message = expect_identifier("message name");
      if (peek().is_punct("(")) {
        advance();
        while (!at_end() && !peek().is_punct(")")) {
          action.args.push_back(parse_expr());
          if (peek().is_punct(",")) {
            advance();
            continue;
          }
          break;
        }
        expect_punct(")");
      }
      skip_semicolons();
      return action;
    }
    if (peek().is_keyword("set")) {
      advance();
      action.kind = Action::Kind::SetProperty;
      action.property = expect_identifier("property name");
      expect_punct("=");
      action.value = parse_expr();
      skip_semicolons();
      return action;
    }
    error({"'send'", "'set'"});
    return std::nullopt;
  }

  // --- expressions ------------------------------------------------------
  // Precedence: or < and < not < comparison < additive < multiplicative
  // < unary minus < primary.

  Expr parse_expr() { return parse_or(); }

  Expr parse_or() {
    Expr lhs = parse_and();
    while (peek().is_keyword("or")) {
      SourceLocation l = loc_of(peek());
      advance();
      Expr node = Expr::make_binary("or", std::move(lhs), parse_and());
      node.loc = l;
      lhs = std::move(node);
    }
    return lhs;
  }

  Expr parse_and() {
    Expr lhs = parse_not();
    while (peek().is_keyword("and")) {
      SourceLocation l = loc_of(peek());
      advance();
      Expr node = Expr::make_binary("and", std::move(lhs), parse_not());
      node.loc = l;
      lhs = std::move(node);
    }
    return lhs;
  }

  Expr parse_not() {
    if (peek().is_keyword("not")) {
      SourceLocation l = loc_of(peek());
      advance();
      Expr node = Expr::make_unary("not", parse_not());
      node.loc = l;
      return node;
    }
    return parse_comparison();
  }

  Expr parse_comparison() {
    Expr lhs = parse_additive();
    static const char* ops[] = {"==", "!=", "<=", ">=", "<", ">"};
    for (const char* op : ops) {
      if (peek().is_punct(op)) {
        SourceLocation l = loc_of(peek());
        advance();
        Expr node = Expr::make_binary(op, std::move(lhs), parse_additive());
        node.loc = l;
        return node;
      }
    }
    return lhs;
  }

  Expr parse_additive() {
    Expr lhs = parse_multiplicative();
    while (peek().is_punct("+") || peek().is_punct("-")) {
      std::string op = peek().lexeme;
      SourceLocation l = loc_of(peek());
      advance();
      Expr node = Expr::make_binary(op, std::move(lhs), parse_multiplicative());
      node.loc = l;
      lhs = std::move(node);
    }
    return lhs;
  }

  Expr parse_multiplicative() {
    Expr lhs = parse_unary();
    while (peek().is_punct("*") || peek().is_punct("/")) {
      std::string op = peek().lexeme;
      SourceLocation l = loc_of(peek());
      advance();
      Expr node = Expr::make_binary(op, std::move(lhs), parse_unary());
      node.loc = l;
      lhs = std::move(node);
    }
    return lhs;
  }

  Expr parse_unary() {
    if (peek().is_punct("-")) {
      SourceLocation l = loc_of(peek());
      advance();
      Expr operand = parse_unary();
      // Fold "-literal" into a negative literal so -5 and the literal -5 are
      // one and the same expression.
      if (operand.kind == ExprKind::Literal) {
        if (const auto* i = std::get_if<int64_t>(&operand.literal)) {
          operand.literal = Value{-*i};
          operand.loc = l;
          return operand;
        }
        if (const auto* d = std::get_if<double>(&operand.literal)) {
          operand.literal = Value{-*d};
          operand.loc = l;
          return operand;
        }
      }
      Expr node = Expr::make_unary("-", std::move(operand));
      node.loc = l;
      return node;
    }
    return parse_primary();
  }

  Expr parse_primary() {
    const Token& t = peek();
    SourceLocation l = loc_of(t);
    if (t.is_punct("(")) {
      advance();
      Expr inner = parse_expr();
      expect_punct(")");
      return inner;
    }
    if (t.kind == TokenKind::Identifier) {
      Expr e = Expr::make_ref(advance().lexeme);
      e.loc = l;
      return e;
    }
    auto v = parse_literal_value();
    if (v) {
      Expr e = Expr::make_literal(std::move(*v));
      e.loc = l;
      return e;
    }
    error({"expression"});
    Expr e = Expr::make_literal(Value{false});
    e.loc = l;
    advance();
    return e;
  }

  // --- data analytics ---------------------------------------------------

  void parse_data_analytics(Thing& thing) {
    DataAnalyticsSpec spec;
    spec.loc = loc_of(peek());
    advance();  // 'data_analytics'
    spec.name = expect_identifier("data analytics block name");
    if (!expect_punct("{")) return;
    while (!at_end() && !peek().is_punct("}")) {
      std::size_t before = pos_;
      skip_semicolons();
      parse_da_member(spec);
      if (pos_ == before) advance();
    }
    expect_punct("}");
    skip_semicolons();
    thing.analytics = std::move(spec);
  }

  void parse_da_member(DataAnalyticsSpec& spec) {
    const Token& t = peek();
    if (t.is_punct("}")) return;
    if (t.is_keyword("labels")) {
      advance();
      if (peek().is_keyword("ON")) {
        spec.labels = LabelsMode::On;
        advance();
      } else if (peek().is_keyword("OFF")) {
        spec.labels = LabelsMode::Off;
        advance();
      } else if (peek().is_keyword("SEMI")) {
        spec.labels = LabelsMode::Semi;
        advance();
      } else {
        error({"'ON'", "'OFF'", "'SEMI'"});
      }
      skip_semicolons();
      return;
    }
    if (t.is_keyword("features")) {
      advance();
      parse_identifier_list(spec.features);
      return;
    }
    if (t.is_keyword("prediction_results")) {
      advance();
      spec.prediction_results = expect_identifier("property name");
      skip_semicolons();
      return;
    }
    if (t.is_keyword("sequential")) {
      advance();
      if (peek().is_keyword("true")) {
        spec.sequential = true;
        advance();
      } else if (peek().is_keyword("false")) {
        spec.sequential = false;
        advance();
      } else {
        error({"'true'", "'false'"});
      }
      skip_semicolons();
      return;
    }
    if (t.is_keyword("timestamps")) {
      advance();
      if (peek().is_keyword("ON")) {
        spec.timestamps = OnOff::On;
        advance();
      } else if (peek().is_keyword("OFF")) {
        spec.timestamps = OnOff::Off;
        advance();
      } else {
        error({"'ON'", "'OFF'"});
      }
      skip_semicolons();
      return;
    }
    if (t.is_keyword("model_algorithm")) {
      advance();
      spec.algorithm = expect_identifier("algorithm name");
      if (peek().is_punct("(")) {
        advance();
        while (!at_end() && !peek().is_punct(")")) {
          Hyperparameter hp;
          hp.loc = loc_of(peek());
          hp.name = expect_identifier("hyperparameter name");
          if (hp.name.empty()) break;
          // Values run to the next ',' or ')': `hidden_layer_sizes 32 16`.
          // Barewords like `activation relu` are taken as strings.
          while (true) {
            auto v = parse_literal_value();
            if (!v && peek().kind == TokenKind::Identifier)
              v = Value{advance().lexeme};
            if (!v) break;
            hp.values.push_back(std::move(*v));
          }
          if (hp.values.empty()) error({"hyperparameter value"});
          spec.hyperparameters.push_back(std::move(hp));
          if (peek().is_punct(",")) {
            advance();
            continue;
          }
          break;
        }
        expect_punct(")");
      }
      skip_semicolons();
      return;
    }
    if (t.is_keyword("training_results")) {
      advance();
      spec.training_results = expect_string("file path string");
      skip_semicolons();
      return;
    }
    if (t.is_keyword("dataset")) {
      advance();
      spec.dataset = expect_string("file path string");
      skip_semicolons();
      return;
    }
    error({"'labels'", "'features'", "'prediction_results'", "'sequential'",
           "'timestamps'", "'model_algorithm'", "'training_results'", "'dataset'"});
    synchronize({});
  }

  // --- configurations ---------------------------------------------------

  void parse_configuration() {
    Configuration conf;
    conf.loc = loc_of(peek());
    advance();  // 'configuration'
    conf.name = expect_identifier("configuration name");
    for (auto& a : parse_inline_annotations()) conf.annotations.push_back(std::move(a));
    if (!expect_punct("{")) {
      synchronize({"thing", "configuration", "import"});
      return;
    }
    while (!at_end() && !peek().is_punct("}")) {
      std::size_t before = pos_;
      parse_configuration_member(conf);
      if (pos_ == before) advance();
    }
    expect_punct("}");
    result_.model.configurations.push_back(std::move(conf));
  }

  void parse_configuration_member(Configuration& conf) {
    skip_semicolons();
    const Token& t = peek();
    if (t.is_punct("}")) return;
    if (t.kind == TokenKind::AnnotationKey) {
      conf.annotations.push_back(parse_annotation());
      skip_semicolons();
      return;
    }
    if (t.is_keyword("instance")) {
      Instance inst;
      inst.loc = loc_of(peek());
      advance();
      inst.name = expect_identifier("instance name");
      expect_punct(":");
      inst.thing = expect_identifier("thing name");
      inst.annotations = parse_inline_annotations();
      skip_semicolons();
      conf.instances.push_back(std::move(inst));
      return;
    }
    if (t.is_keyword("connector")) {
      Connector conn;
      conn.loc = loc_of(peek());
      advance();
      conn.from.loc = loc_of(peek());
      conn.from.instance = expect_identifier("instance name");
      expect_punct(".");
      conn.from.port = expect_identifier("port name");
      expect_punct("=>");
      conn.to.loc = loc_of(peek());
      conn.to.instance = expect_identifier("instance name");
      expect_punct(".");
      conn.to.port = expect_identifier("port name");
      skip_semicolons();
      conf.connectors.push_back(std::move(conn));
      return;
    }
    error({"'instance'", "'connector'", "annotation"});
    synchronize({"instance", "connector"});
  }

  std::vector<Token> tokens_;
  std::string file_;
  std::size_t pos_ = 0;
  ParseResult result_;
};

}  // namespace

std::vector<Diagnostic> ParseResult::diagnostics() const {
  std::vector<Diagnostic> out;
  out.reserve(errors.size());
  for (const auto& e : errors) out.push_back(e.to_diagnostic());
  return out;
}

ParseResult parse(const std::string& text, const std::string& file) {
  LexResult lexed = tokenize(text, file);
  Parser parser(std::move(lexed.tokens), file, std::move(lexed.errors));
  return parser.run();
}

}  // namespace mdml
