#include "mdml/codegen.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "mdml/conv/carray.hpp"
#include "mdml/conv/quantize.hpp"
#include "mdml/conv/serialize.hpp"
#include "mdml/printer.hpp"

namespace mdml::codegen {

namespace {

enum class Lang { Python, Java, Cpp };

std::string snake_case(const std::string& name) {
  std::string out;
  for (std::size_t i = 0; i < name.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(name[i]);
    if (std::isupper(c)) {
      bool boundary = i > 0 && (std::islower(static_cast<unsigned char>(name[i - 1])) ||
                                (i + 1 < name.size() &&
                                 std::islower(static_cast<unsigned char>(name[i + 1]))));
      if (boundary) out += '_';
      out += static_cast<char>(std::tolower(c));
    } else {
      out += static_cast<char>(c);
    }
  }
  return out;
}

std::string upper_snake(const std::string& name) {
  std::string out = snake_case(name);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

// on_comm_tick -> onCommTick
std::string camel(const std::string& prefix, const std::string& a, const std::string& b) {
  std::string out = prefix;
  auto append = [&out](const std::string& word) {
    bool start = true;
    for (char c : word) {
      if (c == '_') {
        start = true;
        continue;
      }
      out += start ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : c;
      start = false;
    }
  };
  append(a);
  append(b);
  return out;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void push_error(std::vector<Diagnostic>& diags, std::string node, std::string message) {
  diags.push_back(Diagnostic{Severity::Error, std::move(node), std::move(message), {}});
}

// Shared with the model printer so generated numeric literals round-trip
// identically across languages.
std::string double_to_text(double v) { return value_to_source(Value{v}); }

// ---- expression and action translation ----

std::string literal_text(const Value& v, Lang lang) {
  if (std::holds_alternative<bool>(v)) {
    bool b = std::get<bool>(v);
    if (lang == Lang::Python) return b ? "True" : "False";
    return b ? "true" : "false";
  }
  return value_to_source(v);  // int, float and string syntax is shared
}

bool atomic(const Expr& e) {
  return e.kind == ExprKind::Literal || e.kind == ExprKind::Ref;
}

std::string expr_text(const Expr& e, Lang lang, const Thing& thing) {
  switch (e.kind) {
    case ExprKind::Literal:
      return literal_text(e.literal, lang);
    case ExprKind::Ref:
      if (lang == Lang::Python && thing.find_property(e.name)) return "self." + e.name;
      return e.name;
    case ExprKind::Unary: {
      std::string inner = expr_text(e.args[0], lang, thing);
      if (!atomic(e.args[0])) inner = "(" + inner + ")";
      if (e.name == "not") return lang == Lang::Python ? "not " + inner : "!" + inner;
      return e.name + inner;
    }
    case ExprKind::Binary: {
      std::string op = e.name;
      if (lang != Lang::Python) {
        if (op == "and") op = "&&";
        if (op == "or") op = "||";
      }
      std::string lhs = expr_text(e.args[0], lang, thing);
      std::string rhs = expr_text(e.args[1], lang, thing);
      if (!atomic(e.args[0])) lhs = "(" + lhs + ")";
      if (!atomic(e.args[1])) rhs = "(" + rhs + ")";
      return lhs + " " + op + " " + rhs;
    }
  }
  return {};
}

std::string guard_text(const Expr& e, Lang lang, const Thing& thing) {
  std::string g = expr_text(e, lang, thing);
  return atomic(e) ? g : "(" + g + ")";
}

std::string action_text(const Action& a, Lang lang, const Thing& thing) {
  if (a.kind == Action::Kind::Send) {
    std::vector<std::string> args;
    for (const Expr& e : a.args) args.push_back(expr_text(e, lang, thing));
    std::string call = join(args, ", ");
    switch (lang) {
      case Lang::Python:
        return "self.send_" + a.port + "_" + a.message + "(" + call + ")";
      case Lang::Java:
        return camel("send", a.port, a.message) + "(" + call + ");";
      case Lang::Cpp:
        return "send_" + a.port + "_" + a.message + "(" + call + ");";
    }
  }
  std::string value = a.value ? expr_text(*a.value, lang, thing) : "0";
  if (lang == Lang::Python) return "self." + a.property + " = " + value;
  return a.property + " = " + value + ";";
}

// ---- per-thing views ----

struct PortMessage {
  const Port* port;
  const Message* message;  // null when the thing does not declare it
  std::string message_name;
};

std::vector<PortMessage> inbound(const Thing& t) {
  std::vector<PortMessage> out;
  for (const Port& p : t.ports)
    for (const std::string& m : p.receives)
      out.push_back(PortMessage{&p, t.find_message(m), m});
  return out;
}

std::vector<PortMessage> outbound(const Thing& t) {
  std::vector<PortMessage> out;
  for (const Port& p : t.ports)
    for (const std::string& m : p.sends)
      out.push_back(PortMessage{&p, t.find_message(m), m});
  return out;
}

std::vector<const Transition*> transitions_for(const Statechart& chart, const std::string& port,
                                               const std::string& message) {
  std::vector<const Transition*> out;
  for (const Transition& tr : chart.transitions)
    if (tr.trigger.port == port && tr.trigger.message == message) out.push_back(&tr);
  return out;
}

const char* scalar_default(ScalarType t, Lang lang) {
  switch (t) {
    case ScalarType::Int:
    case ScalarType::Long:
      return "0";
    case ScalarType::Float:
      return lang == Lang::Python ? "0.0" : "0.0f";
    case ScalarType::Double:
      return "0.0";
    case ScalarType::Bool:
      return lang == Lang::Python ? "False" : "false";
    case ScalarType::String:
      return "\"\"";
  }
  return "0";
}

std::string init_text(const Property& p, Lang lang) {
  if (!p.init || p.type.is_array()) return scalar_default(p.type.scalar, lang);
  std::string text = literal_text(*p.init, lang);
  if (lang != Lang::Python && p.type.scalar == ScalarType::Float &&
      std::holds_alternative<double>(*p.init))
    text += 'f';
  return text;
}

const char* java_scalar(ScalarType t) {
  switch (t) {
    case ScalarType::Int: return "int";
    case ScalarType::Long: return "long";
    case ScalarType::Float: return "float";
    case ScalarType::Double: return "double";
    case ScalarType::Bool: return "boolean";
    case ScalarType::String: return "String";
  }
  return "int";
}

const char* cpp_scalar(ScalarType t) {
  switch (t) {
    case ScalarType::Int: return "int";
    case ScalarType::Long: return "long";
    case ScalarType::Float: return "float";
    case ScalarType::Double: return "double";
    case ScalarType::Bool: return "bool";
    case ScalarType::String: return "String";  // the Arduino string class
  }
  return "int";
}

std::string quoted_list(const std::vector<std::string>& names) {
  std::vector<std::string> quoted;
  for (const std::string& n : names) quoted.push_back("\"" + n + "\"");
  return join(quoted, ", ");
}

// ---- python state machine module ----

std::string python_machine(const Thing& thing) {
  const Statechart* chart = thing.statechart ? &*thing.statechart : nullptr;
  std::string out;
  if (chart)
    out += "\"\"\"State machine for thing " + thing.name + ", statechart " + chart->name +
           ".\"\"\"\n\n";
  else
    out += "\"\"\"Message stubs for thing " + thing.name + ".\"\"\"\n\n";

  std::vector<std::string> states;
  if (chart)
    for (const State& s : chart->states) states.push_back(s.name);
  out += "STATE_NAMES = (" + quoted_list(states) + (states.size() == 1 ? "," : "") + ")\n";

  out += "\n\nclass " + thing.name + "Machine:\n";
  out += "    \"\"\"The first declared transition whose source, event and guard match "
         "fires.\"\"\"\n\n";
  out += "    def __init__(self):\n";
  std::vector<std::string> init_lines;
  if (chart) init_lines.push_back("self.state = \"" + chart->initial + "\"");
  for (const Property& p : thing.properties) {
    if (p.type.is_array()) {
      init_lines.push_back("self." + p.name + " = [" + scalar_default(p.type.scalar, Lang::Python) +
                           "] * " + std::to_string(p.type.width()));
    } else {
      init_lines.push_back("self." + p.name + " = " + init_text(p, Lang::Python));
    }
  }
  if (chart) {
    if (const State* init = chart->find_state(chart->initial)) {
      for (const Action& a : init->on_entry)
        init_lines.push_back(action_text(a, Lang::Python, thing));
    }
  }
  if (init_lines.empty()) init_lines.push_back("pass");
  for (const std::string& line : init_lines) out += "        " + line + "\n";

  auto handlers = inbound(thing);
  if (!handlers.empty()) out += "\n    # inbound handlers, one per received message\n";
  for (const PortMessage& pm : handlers) {
    std::string params;
    if (pm.message)
      for (const Param& p : pm.message->params) params += ", " + p.name;
    out += "\n    def on_" + pm.port->name + "_" + pm.message_name + "(self" + params + "):\n";
    std::vector<const Transition*> fires =
        chart ? transitions_for(*chart, pm.port->name, pm.message_name)
              : std::vector<const Transition*>{};
    if (fires.empty()) {
      out += "        pass\n";
      continue;
    }
    for (const Transition* tr : fires) {
      std::string cond = "self.state == \"" + tr->source + "\"";
      if (tr->guard) cond += " and " + guard_text(*tr->guard, Lang::Python, thing);
      out += "        if " + cond + ":\n";
      out += "            # " + tr->source + " -> " + tr->target + "\n";
      for (const Action& a : tr->actions)
        out += "            " + action_text(a, Lang::Python, thing) + "\n";
      out += "            self.state = \"" + tr->target + "\"\n";
      if (const State* target = chart->find_state(tr->target))
        for (const Action& a : target->on_entry)
          out += "            " + action_text(a, Lang::Python, thing) + "\n";
      out += "            return\n";
    }
  }

  auto stubs = outbound(thing);
  if (!stubs.empty()) out += "\n    # outbound stubs, one per sent message: bind the transport here\n";
  for (const PortMessage& pm : stubs) {
    std::string params;
    if (pm.message)
      for (const Param& p : pm.message->params) params += ", " + p.name;
    out += "\n    def send_" + pm.port->name + "_" + pm.message_name + "(self" + params + "):\n";
    out += "        pass\n";
  }
  return out;
}

// ---- java state machine class ----

std::string java_machine(const Thing& thing) {
  const Statechart* chart = thing.statechart ? &*thing.statechart : nullptr;
  std::string cls = thing.name + "StateMachine";
  std::string out;
  if (chart)
    out += "/** State machine for thing " + thing.name + ", statechart " + chart->name + ". */\n";
  else
    out += "/** Message stubs for thing " + thing.name + ". */\n";
  out += "public final class " + cls + " {\n";
  out += "    /** The first declared transition whose source, event and guard match fires. */\n";
  std::vector<std::string> states;
  if (chart)
    for (const State& s : chart->states) states.push_back(s.name);
  out += "    public static final String[] STATE_NAMES = {" + quoted_list(states) + "};\n\n";

  if (chart) out += "    private String state = \"" + chart->initial + "\";\n";
  for (const Property& p : thing.properties) {
    std::string type = java_scalar(p.type.scalar);
    if (p.type.is_array()) {
      out += "    private " + type + "[] " + p.name + " = new " + type + "[" +
             std::to_string(p.type.width()) + "];\n";
    } else {
      out += "    private " + type + " " + p.name + " = " + init_text(p, Lang::Java) + ";\n";
    }
  }

  std::vector<std::string> ctor;
  if (chart) {
    if (const State* init = chart->find_state(chart->initial))
      for (const Action& a : init->on_entry) ctor.push_back(action_text(a, Lang::Java, thing));
  }
  if (!ctor.empty()) {
    out += "\n    public " + cls + "() {\n";
    for (const std::string& line : ctor) out += "        " + line + "\n";
    out += "    }\n";
  }
  if (chart) {
    out += "\n    public String state() {\n";
    out += "        return state;\n";
    out += "    }\n";
  }

  auto handlers = inbound(thing);
  if (!handlers.empty()) out += "\n    // inbound handlers, one per received message\n";
  for (const PortMessage& pm : handlers) {
    std::vector<std::string> params;
    if (pm.message)
      for (const Param& p : pm.message->params)
        params.push_back(std::string(java_scalar(p.type.scalar)) + (p.type.is_array() ? "[] " : " ") +
                         p.name);
    out += "\n    public void " + camel("on", pm.port->name, pm.message_name) + "(" +
           join(params, ", ") + ") {\n";
    std::vector<const Transition*> fires =
        chart ? transitions_for(*chart, pm.port->name, pm.message_name)
              : std::vector<const Transition*>{};
    for (const Transition* tr : fires) {
      std::string cond = "state.equals(\"" + tr->source + "\")";
      if (tr->guard) cond += " && " + guard_text(*tr->guard, Lang::Java, thing);
      out += "        if (" + cond + ") {\n";
      out += "            // " + tr->source + " -> " + tr->target + "\n";
      for (const Action& a : tr->actions)
        out += "            " + action_text(a, Lang::Java, thing) + "\n";
      out += "            state = \"" + tr->target + "\";\n";
      if (const State* target = chart->find_state(tr->target))
        for (const Action& a : target->on_entry)
          out += "            " + action_text(a, Lang::Java, thing) + "\n";
      out += "            return;\n";
      out += "        }\n";
    }
    out += "    }\n";
  }

  auto stubs = outbound(thing);
  if (!stubs.empty()) out += "\n    // outbound stubs, one per sent message: bind the transport here\n";
  for (const PortMessage& pm : stubs) {
    std::vector<std::string> params;
    if (pm.message)
      for (const Param& p : pm.message->params)
        params.push_back(std::string(java_scalar(p.type.scalar)) + (p.type.is_array() ? "[] " : " ") +
                         p.name);
    out += "\n    public void " + camel("send", pm.port->name, pm.message_name) + "(" +
           join(params, ", ") + ") {\n";
    out += "    }\n";
  }
  out += "}\n";
  return out;
}

// ---- arduino state machine block ----

std::string cpp_machine(const Thing& thing) {
  const Statechart* chart = thing.statechart ? &*thing.statechart : nullptr;
  std::string state_enum = thing.name + "State";
  std::string out;
  out += "// ---- thing " + thing.name +
         (chart ? ", statechart " + chart->name : std::string()) + " ----\n\n";

  std::vector<std::string> states;
  if (chart)
    for (const State& s : chart->states) states.push_back(s.name);
  if (chart) {
    out += "static const char* const " + upper_snake(thing.name) + "_STATE_NAMES[] = {" +
           quoted_list(states) + "};\n\n";
    out += "enum class " + state_enum + " : unsigned char { " + join(states, ", ") + " };\n\n";
  }

  out += "struct " + thing.name + " {\n";
  if (chart)
    out += "  " + state_enum + " state = " + state_enum + "::" + chart->initial + ";\n";
  for (const Property& p : thing.properties) {
    std::string type = cpp_scalar(p.type.scalar);
    if (p.type.is_array()) {
      out += "  " + type + " " + p.name + "[" + std::to_string(p.type.width()) + "] = {};\n";
    } else {
      out += "  " + type + " " + p.name + " = " + init_text(p, Lang::Cpp) + ";\n";
    }
  }

  if (chart) {
    if (const State* init = chart->find_state(chart->initial); init && !init->on_entry.empty()) {
      out += "\n  void begin() {\n";
      for (const Action& a : init->on_entry)
        out += "    " + action_text(a, Lang::Cpp, thing) + "\n";
      out += "  }\n";
    }
  }

  auto handlers = inbound(thing);
  if (!handlers.empty()) out += "\n  // inbound handlers, one per received message\n";
  for (const PortMessage& pm : handlers) {
    std::vector<std::string> params;
    if (pm.message)
      for (const Param& p : pm.message->params)
        params.push_back(std::string(cpp_scalar(p.type.scalar)) + " " + p.name +
                         (p.type.is_array() ? "[]" : ""));
    out += "\n  void on_" + pm.port->name + "_" + pm.message_name + "(" + join(params, ", ") +
           ") {\n";
    std::vector<const Transition*> fires =
        chart ? transitions_for(*chart, pm.port->name, pm.message_name)
              : std::vector<const Transition*>{};
    if (fires.empty() || !chart) {
      out += "  }\n";
      continue;
    }
    // Group by source state, preserving declaration order inside each case.
    out += "    switch (state) {\n";
    for (const State& s : chart->states) {
      std::vector<const Transition*> here;
      for (const Transition* tr : fires)
        if (tr->source == s.name) here.push_back(tr);
      if (here.empty()) continue;
      out += "      case " + state_enum + "::" + s.name + ": {\n";
      bool ends_unconditional = false;
      for (const Transition* tr : here) {
        std::string indent = "        ";
        bool guarded = tr->guard.has_value();
        if (guarded) {
          out += indent + "if " +
                 (atomic(*tr->guard) ? "(" + expr_text(*tr->guard, Lang::Cpp, thing) + ")"
                                     : guard_text(*tr->guard, Lang::Cpp, thing)) +
                 " {\n";
          indent += "  ";
        }
        out += indent + "// " + tr->source + " -> " + tr->target + "\n";
        for (const Action& a : tr->actions)
          out += indent + action_text(a, Lang::Cpp, thing) + "\n";
        out += indent + "state = " + state_enum + "::" + tr->target + ";\n";
        if (const State* target = chart->find_state(tr->target))
          for (const Action& a : target->on_entry)
            out += indent + action_text(a, Lang::Cpp, thing) + "\n";
        out += indent + "return;\n";
        if (guarded) {
          out += "        }\n";
        } else {
          ends_unconditional = true;
          break;  // later transitions from this state are unreachable
        }
      }
      if (!ends_unconditional) out += "        return;\n";
      out += "      }\n";
    }
    out += "      default:\n";
    out += "        break;\n";
    out += "    }\n";
    out += "  }\n";
  }

  auto stubs = outbound(thing);
  if (!stubs.empty()) out += "\n  // outbound stubs, one per sent message: bind the transport here\n";
  for (const PortMessage& pm : stubs) {
    std::vector<std::string> params;
    std::vector<std::string> silence;
    if (pm.message)
      for (const Param& p : pm.message->params) {
        params.push_back(std::string(cpp_scalar(p.type.scalar)) + " " + p.name +
                         (p.type.is_array() ? "[]" : ""));
        silence.push_back("    (void)" + p.name + ";");
      }
    out += "\n  void send_" + pm.port->name + "_" + pm.message_name + "(" + join(params, ", ") +
           ") {\n";
    for (const std::string& line : silence) out += line + "\n";
    out += "  }\n";
  }
  out += "};\n\n";
  out += thing.name + " " + snake_case(thing.name) + ";\n";
  return out;
}

// ---- program templates ----

constexpr std::string_view kPredictTemplate = R"PY(#!/usr/bin/env python3
"""Prediction program for thing {{thing}} on target {{target}}.

Loads the converted model from {{model_path}}. On the device the same
container is served through the {{runtime}} runtime; this reference
pipeline keeps predictions reproducible without it.
"""

import csv
import math
import struct
import sys

MODEL_PATH = "{{model_path}}"
EXPECTED_DTYPE = {{dtype}}  # {{dtype_name}}
INPUT_WIDTH = {{input_width}}
FEATURES = [{{features}}]


def load_mlq(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != b"MLQ1":
        raise ValueError("%s: missing MLQ1 magic" % path)
    version, dtype = blob[4], blob[5]
    if version != 1:
        raise ValueError("%s: unsupported version %d" % (path, version))
    if dtype != EXPECTED_DTYPE:
        raise ValueError("%s: dtype %d, this target deploys dtype %d"
                         % (path, dtype, EXPECTED_DTYPE))
    (layer_count,) = struct.unpack_from("<H", blob, 6)
    offset = 8
    layers = []
    for _ in range(layer_count):
        in_dim, out_dim = struct.unpack_from("<II", blob, offset)
        activation = blob[offset + 8]
        offset += 9
        count = in_dim * out_dim
        if dtype == 0:
            weights = list(struct.unpack_from("<%df" % count, blob, offset))
            offset += 4 * count
        else:
            scale, zero_point = struct.unpack_from("<fi", blob, offset)
            offset += 8
            quantized = struct.unpack_from("<%db" % count, blob, offset)
            offset += count
            weights = [scale * (q - zero_point) for q in quantized]
        biases = list(struct.unpack_from("<%df" % out_dim, blob, offset))
        offset += 4 * out_dim
        layers.append((in_dim, out_dim, activation, weights, biases))
    return layers


def forward(layers, row):
    current = row
    for in_dim, out_dim, activation, weights, biases in layers:
        nxt = []
        for o in range(out_dim):
            acc = biases[o]
            base = o * in_dim
            for i in range(in_dim):
                acc += weights[base + i] * current[i]
            if activation == 0:
                acc = max(acc, 0.0)
            elif activation == 1:
                acc = 1.0 / (1.0 + math.exp(-acc))
            nxt.append(acc)
        current = nxt
    return current


def main():
    if len(sys.argv) != 2:
        raise SystemExit("usage: predict.py <features.csv>")
    layers = load_mlq(MODEL_PATH)
    writer = csv.writer(sys.stdout)
    writer.writerow(["row", "label", "score_0", "score_1"])
    with open(sys.argv[1], newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for index, row in enumerate(reader):
            values = [float(v) for v in row[:INPUT_WIDTH]]
            scores = forward(layers, values)
            label = 1 if scores[1] > scores[0] else 0
            writer.writerow([index, label, "%.6f" % scores[0], "%.6f" % scores[1]])


if __name__ == "__main__":
    main()
)PY";

constexpr std::string_view kTrainTemplate = R"PY(#!/usr/bin/env python3
"""Training pipeline for thing {{thing}} of configuration {{config}}.

Reads the declared dataset, standardizes the features, carves the
chronological tail off as validation data, trains the MLP with the
Keras API for TensorFlow and exports the weights to {{model_out}}.
"""

import csv
import json
import struct

import numpy as np
from tensorflow import keras

DATASET = {{dataset}}
TRAINING_LOG = {{training_log}}
METRICS_OUT = "metrics.json"
STANDARDIZER_OUT = "standardizer.json"
MODEL_OUT = "{{model_out}}"
HIDDEN_LAYERS = [{{hidden}}]
HIDDEN_ACTIVATION = "{{activation}}"
LEARNING_RATE = {{lr}}
BATCH_SIZE = {{batch}}
EPOCHS = {{epochs}}
PATIENCE = {{patience}}
VALIDATION_FRACTION = {{valfrac}}
SHUFFLE = {{shuffle}}
SEED = {{seed}}
TRAIN_FRACTION = 0.8


def load_dataset(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[-1] != "label":
            raise ValueError("%s: header must end with 'label'" % path)
        xs, ys = [], []
        for row in reader:
            xs.append([float(v) for v in row[:-1]])
            ys.append(int(row[-1]))
    return np.asarray(xs, dtype=np.float32), np.asarray(ys, dtype=np.int32)


def build_model(input_width):
    keras.utils.set_random_seed(SEED)
    model = keras.Sequential()
    model.add(keras.layers.Input(shape=(input_width,)))
    for units in HIDDEN_LAYERS:
        model.add(keras.layers.Dense(units, activation=HIDDEN_ACTIVATION))
    model.add(keras.layers.Dense(2, activation="sigmoid"))
    optimizer = keras.optimizers.Adam(
        learning_rate=LEARNING_RATE, beta_1=0.9, beta_2=0.999, epsilon=1e-07)
    model.compile(optimizer=optimizer, loss="binary_crossentropy",
                  metrics=["accuracy"])
    return model


def export_mlq(model, path):
    """Serializes the dense layers as a float32 .mlq container."""
    codes = {"relu": 0, "sigmoid": 1, "linear": 2}
    layers = [l for l in model.layers if isinstance(l, keras.layers.Dense)]
    blob = bytearray(b"MLQ1")
    blob += struct.pack("<BBH", 1, 0, len(layers))
    for layer in layers:
        weights, biases = layer.get_weights()
        in_dim, out_dim = weights.shape
        act = codes[keras.activations.serialize(layer.activation)]
        blob += struct.pack("<IIB", in_dim, out_dim, act)
        blob += weights.T.astype("<f4").tobytes()
        blob += biases.astype("<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(blob)


def main():
    xs, ys = load_dataset(DATASET)
    split = int(len(xs) * TRAIN_FRACTION)
    train_x, test_x = xs[:split], xs[split:]
    train_y, test_y = ys[:split], ys[split:]

    mean = train_x.mean(axis=0)
    std = train_x.std(axis=0)
    std[std == 0.0] = 1.0
    train_x = (train_x - mean) / std
    test_x = (test_x - mean) / std

    model = build_model(train_x.shape[1])
    callbacks = []
    if PATIENCE > 0:
        callbacks.append(keras.callbacks.EarlyStopping(
            monitor="val_loss", patience=PATIENCE, restore_best_weights=True))
    history = model.fit(
        train_x, keras.utils.to_categorical(train_y, 2),
        batch_size=BATCH_SIZE, epochs=EPOCHS, shuffle=SHUFFLE,
        validation_split=VALIDATION_FRACTION, callbacks=callbacks, verbose=2)

    loss, accuracy = model.evaluate(
        test_x, keras.utils.to_categorical(test_y, 2), verbose=0)
    export_mlq(model, MODEL_OUT)
    with open(METRICS_OUT, "w") as fh:
        json.dump({"accuracy": float(accuracy), "loss": float(loss)}, fh, indent=2)
    with open(STANDARDIZER_OUT, "w") as fh:
        json.dump({"mean": mean.tolist(), "std": std.tolist()}, fh, indent=2)
    with open(TRAINING_LOG, "w") as fh:
        for epoch, value in enumerate(history.history["loss"], 1):
            fh.write("epoch %d loss %.6f\n" % (epoch, value))


if __name__ == "__main__":
    main()
)PY";

constexpr std::string_view kSketchHeader = R"CPP(// Deployment sketch for configuration {{config}} on {{target}}.
{{model_note}})CPP";

constexpr std::string_view kSketchModelSection =
    R"CPP(#include <TensorFlowLite.h>

#include "tensorflow/lite/micro/micro_interpreter.h"
#include "tensorflow/lite/micro/micro_mutable_op_resolver.h"
#include "tensorflow/lite/schema/schema_generated.h"

extern const unsigned char model_data[];
extern const unsigned int model_data_len;

constexpr int kTensorArenaSize = {{arena}};
alignas(16) static uint8_t tensor_arena[kTensorArenaSize];

static const tflite::Model* ml_model = nullptr;
static tflite::MicroInterpreter* interpreter = nullptr;

)CPP";

constexpr std::string_view kSketchSetupModel = R"CPP(  ml_model = tflite::GetModel(model_data);
  static tflite::MicroMutableOpResolver<4> resolver;
  resolver.AddFullyConnected();
  resolver.AddRelu();
  resolver.AddLogistic();
  resolver.AddQuantize();
  static tflite::MicroInterpreter micro_interpreter(ml_model, resolver, tensor_arena,
                                                    kTensorArenaSize);
  interpreter = &micro_interpreter;
  interpreter->AllocateTensors();
)CPP";

// ---- generation context ----

struct Context {
  const LinkedModel& model;
  const Configuration& config;
  const platform::PlatformProfile& profile;
  std::vector<const Thing*> things;  // instantiated, in instance order, deduped
  const Thing* ml_thing = nullptr;
  const TrainingPlan* plan = nullptr;
  std::vector<std::uint8_t> mlq_bytes;
  std::uint64_t arena_bytes = 0;
};

std::string features_list(const Thing& t) {
  return t.analytics ? quoted_list(t.analytics->features) : std::string();
}

std::string hidden_list(const TrainingPlan& plan) {
  std::vector<std::string> parts;
  for (std::uint32_t u : plan.hidden_layers) parts.push_back(std::to_string(u));
  return join(parts, ", ");
}

std::string predict_program(const Context& ctx, const std::string& model_path,
                            const std::string& runtime) {
  bool quantized = ctx.profile.quantized;
  return render_template(
      kPredictTemplate,
      {{"thing", ctx.ml_thing->name},
       {"target", ctx.profile.id},
       {"model_path", model_path},
       {"runtime", runtime},
       {"dtype", quantized ? "1" : "0"},
       {"dtype_name", quantized ? "int8" : "float32"},
       {"input_width", std::to_string(ctx.plan->input_width)},
       {"features", features_list(*ctx.ml_thing)}});
}

std::string train_program(const Context& ctx, const std::string& model_out) {
  const DataAnalyticsSpec& da = *ctx.ml_thing->analytics;
  std::string log = da.training_results.empty() ? "Training_results.txt" : da.training_results;
  const ml::TrainConfig& cfg = ctx.plan->config;
  return render_template(
      kTrainTemplate,
      {{"thing", ctx.ml_thing->name},
       {"config", ctx.config.name},
       {"dataset", value_to_source(Value{da.dataset})},
       {"training_log", value_to_source(Value{log})},
       {"model_out", model_out},
       {"hidden", hidden_list(*ctx.plan)},
       {"activation", ml::activation_name(ctx.plan->hidden_activation)},
       {"lr", double_to_text(cfg.learning_rate)},
       {"batch", std::to_string(cfg.batch_size)},
       {"epochs", std::to_string(cfg.epochs)},
       {"patience", std::to_string(cfg.patience)},
       {"valfrac", double_to_text(cfg.validation_fraction)},
       {"shuffle", cfg.shuffle ? "True" : "False"},
       {"seed", std::to_string(cfg.seed)}});
}

std::string sketch_program(const Context& ctx) {
  std::string model_note =
      ctx.ml_thing
          ? "// The converted model ships in ../model/model_data.cc as a C byte array\n"
            "// consumed by TensorFlow Lite for Microcontrollers.\n"
          : "// No data_analytics block is instantiated; the sketch only runs the\n"
            "// statecharts.\n";
  std::string out = render_template(
      kSketchHeader, {{"config", ctx.config.name}, {"target", ctx.profile.id}, {"model_note", model_note}});
  out += "\n";
  if (ctx.ml_thing)
    out += render_template(kSketchModelSection,
                           {{"arena", std::to_string(ctx.arena_bytes)}});
  std::vector<std::string> begins;
  for (const Thing* t : ctx.things) {
    out += cpp_machine(*t);
    out += "\n";
    if (t->statechart) {
      const State* init = t->statechart->find_state(t->statechart->initial);
      if (init && !init->on_entry.empty())
        begins.push_back("  " + snake_case(t->name) + ".begin();");
    }
  }
  out += "void setup() {\n";
  out += "  Serial.begin(9600);\n";
  for (const std::string& b : begins) out += b + "\n";
  if (ctx.ml_thing) out += render_template(kSketchSetupModel, {});
  out += "}\n\n";
  out += "void loop() {\n";
  for (const Thing* t : ctx.things)
    out += "  // Drive " + snake_case(t->name) + " by calling its on_<port>_<message> handlers.\n";
  out += "  delay(100);\n";
  out += "}\n";
  return out;
}

std::string manifest_text(const Context& ctx) {
  std::string out;
  out += "configuration " + ctx.config.name + "\n";
  out += "target " + ctx.profile.id + "\n";
  out += "input model fnv1a64:" + hash_hex(fnv1a64(pretty_print(ctx.model.merged))) + "\n";
  if (!ctx.mlq_bytes.empty()) {
    std::string_view bytes(reinterpret_cast<const char*>(ctx.mlq_bytes.data()),
                           ctx.mlq_bytes.size());
    out += "input model.mlq fnv1a64:" + hash_hex(fnv1a64(bytes)) + "\n";
  }
  return out;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

std::string render_template(
    std::string_view tmpl,
    const std::vector<std::pair<std::string, std::string>>& substitutions) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    std::size_t open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    std::size_t close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    out.append(tmpl.substr(pos, open - pos));
    std::string_view key = tmpl.substr(open + 2, close - open - 2);
    bool found = false;
    for (const auto& [k, v] : substitutions) {
      if (k == key) {
        out += v;
        found = true;
        break;
      }
    }
    if (!found) out.append(tmpl.substr(open, close + 2 - open));
    pos = close + 2;
  }
  return out;
}

const GeneratedFile* GeneratedTree::find(const std::string& path) const {
  for (const GeneratedFile& f : files)
    if (f.path == path) return &f;
  return nullptr;
}

std::vector<std::pair<std::string, std::string>> list_targets(
    const std::vector<platform::PlatformProfile>& registry) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& p : registry) out.emplace_back(p.id, p.display_name);
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<GeneratedTree> generate(const LinkedModel& model, const GenerateOptions& opts,
                                      std::vector<Diagnostic>& diags) {
  const SourceModel& m = model.merged;

  const Configuration* config = nullptr;
  if (!opts.configuration.empty()) {
    config = m.find_configuration(opts.configuration);
    if (!config) {
      push_error(diags, "generate", "unknown configuration '" + opts.configuration + "'");
      return std::nullopt;
    }
  } else if (m.configurations.size() == 1) {
    config = &m.configurations.front();
  } else {
    push_error(diags, "generate",
               m.configurations.empty()
                   ? "the model declares no configurations"
                   : "the model declares " + std::to_string(m.configurations.size()) +
                         " configurations; pick one");
    return std::nullopt;
  }

  const auto& registry = opts.platforms ? *opts.platforms : platform::builtin_registry();
  std::string target_id = opts.target;
  if (target_id.empty()) {
    if (const Annotation* a = effective_annotation(model, config->name, "compiler"))
      target_id = a->value;
    else
      target_id = config->compiler_target();
  }
  if (target_id.empty()) {
    push_error(diags, "configuration " + config->name,
               "configuration '" + config->name +
                   "' has no @compiler annotation and no target override");
    return std::nullopt;
  }
  const platform::PlatformProfile* profile = platform::find_platform(registry, target_id);
  if (!profile) {
    push_error(diags, "generate",
               "unknown compiler target '" + target_id +
                   "' (valid: " + join(platform::platform_ids(registry), ", ") + ")");
    return std::nullopt;
  }

  Context ctx{model, *config, *profile, {}, nullptr, nullptr, {}, 0};
  std::set<std::string> seen;
  for (const Instance& inst : config->instances) {
    const Thing* t = m.find_thing(inst.thing);
    if (!t || !seen.insert(t->name).second) continue;
    ctx.things.push_back(t);
    if (!ctx.ml_thing && t->analytics) ctx.ml_thing = t;
  }

  std::optional<TrainingPlan> plan;
  ml::MlpModel float_model;
  if (ctx.ml_thing) {
    std::string err;
    plan = training_plan(*ctx.ml_thing, &err);
    if (!plan) {
      push_error(diags, "thing " + ctx.ml_thing->name, err);
      return std::nullopt;
    }
    ctx.plan = &*plan;

    ml::MlpArchitecture arch;
    if (opts.model) {
      float_model = *opts.model;
      arch = float_model.architecture();
      if (arch.dims.empty() || arch.dims.front() != plan->input_width || arch.dims.back() != 2) {
        push_error(diags, "thing " + ctx.ml_thing->name,
                   "the provided model does not fit thing '" + ctx.ml_thing->name +
                       "': expected input width " + std::to_string(plan->input_width) +
                       " and a 2-unit output");
        return std::nullopt;
      }
    } else {
      std::vector<std::uint32_t> dims;
      dims.push_back(plan->input_width);
      dims.insert(dims.end(), plan->hidden_layers.begin(), plan->hidden_layers.end());
      dims.push_back(2);
      arch = ml::MlpArchitecture::dense(dims, plan->hidden_activation);
      float_model = ml::init_model(arch, plan->config.seed);
    }

    auto sizes = platform::estimate_sizes(arch);
    if (!sizes) {
      push_error(diags, "thing " + ctx.ml_thing->name,
                 "the model size overflows the platform budget arithmetic");
      return std::nullopt;
    }
    ctx.arena_bytes = sizes->arena_bytes;

    auto decision =
        platform::check_deployability(*sizes, *profile, platform::DeployPolicy::PaperCompat);
    if (!decision.accepted) {
      std::string what = decision.binding_constraint == "flash"
                             ? "the C array source (" + std::to_string(sizes->carray_bytes) +
                                   " bytes)"
                             : "the deployed model";
      std::uint64_t budget = decision.binding_constraint == "flash"
                                 ? profile->flash_bytes.value_or(0)
                                 : profile->ram_bytes.value_or(0);
      push_error(diags, "deployability",
                 "deployment to '" + target_id + "' rejected: " + what + " overruns the " +
                     std::to_string(budget) + "-byte " + decision.binding_constraint +
                     " budget by " + std::to_string(decision.margin_bytes) + " bytes");
      return std::nullopt;
    }

    if (target_id == "python_java" && ctx.ml_thing->analytics->dataset.empty()) {
      push_error(diags, "thing " + ctx.ml_thing->name,
                 "thing '" + ctx.ml_thing->name +
                     "' declares no dataset; target 'python_java' emits a training program");
      return std::nullopt;
    }

    if (profile->quantized) {
      std::string qerr;
      auto qmodel = conv::quantize(float_model, &qerr);
      if (!qmodel) {
        push_error(diags, "thing " + ctx.ml_thing->name, qerr);
        return std::nullopt;
      }
      ctx.mlq_bytes = conv::save_mlq(*qmodel);
    } else {
      ctx.mlq_bytes = conv::save_mlq(float_model);
    }
  }

  GeneratedTree tree;
  tree.configuration = config->name;
  tree.target = target_id;
  auto add = [&tree](std::string path, std::string bytes) {
    tree.files.push_back(GeneratedFile{std::move(path), std::move(bytes)});
  };

  if (!ctx.mlq_bytes.empty())
    add("model/model.mlq",
        std::string(reinterpret_cast<const char*>(ctx.mlq_bytes.data()), ctx.mlq_bytes.size()));

  if (target_id == "python_java") {
    for (const Thing* t : ctx.things) {
      add("src/python/" + snake_case(t->name) + "_state_machine.py", python_machine(*t));
      add("src/java/" + t->name + "StateMachine.java", java_machine(*t));
    }
    if (ctx.ml_thing) {
      add("src/python/train_model.py", train_program(ctx, "../../model/model.mlq"));
      add("src/python/predict.py", predict_program(ctx, "../../model/model.mlq", "TensorFlow"));
    }
  } else if (target_id == "arduino_nano_33_ble_sense_cpp") {
    add("src/main.ino", sketch_program(ctx));
    if (!ctx.mlq_bytes.empty())
      add("model/model_data.cc", conv::emit_carray(ctx.mlq_bytes, "model_data"));
  } else {
    // rpi_3b+_python, rpi_3b+_python_quantized and user-registered profiles
    // share the python prediction tree; the profile's quantized flag picks
    // the deployed container.
    for (const Thing* t : ctx.things)
      add("src/" + snake_case(t->name) + "_state_machine.py", python_machine(*t));
    if (ctx.ml_thing)
      add("src/predict.py", predict_program(ctx, "../model/model.mlq", "TensorFlow Lite"));
  }

  add("MANIFEST", manifest_text(ctx));

  std::sort(tree.files.begin(), tree.files.end(),
            [](const GeneratedFile& a, const GeneratedFile& b) { return a.path < b.path; });
  for (std::size_t i = 0; i < tree.files.size(); ++i) {
    const std::string& p = tree.files[i].path;
    bool bad = p.empty() || p.front() == '/' || p.find("..") != std::string::npos ||
               (i > 0 && tree.files[i - 1].path == p);
    if (bad) {
      push_error(diags, "generate", "internal error: invalid tree path '" + p + "'");
      return std::nullopt;
    }
  }
  return tree;
}

bool write_tree(const GeneratedTree& tree, const std::string& out_dir, std::string* error) {
  namespace fs = std::filesystem;
  fs::path root = fs::path(out_dir) / tree.configuration / tree.target;
  std::error_code ec;
  for (const GeneratedFile& f : tree.files) {
    fs::path dest = root / fs::path(f.path);
    fs::create_directories(dest.parent_path(), ec);
    if (ec) {
      if (error) *error = "cannot create '" + dest.parent_path().string() + "'";
      return false;
    }
    fs::path tmp = dest;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out.write(f.bytes.data(), static_cast<std::streamsize>(f.bytes.size()));
      if (!out) {
        if (error) *error = "cannot write '" + tmp.string() + "'";
        fs::remove(tmp, ec);
        return false;
      }
    }
    fs::rename(tmp, dest, ec);
    if (ec) {
      if (error) *error = "cannot rename '" + tmp.string() + "' to '" + dest.string() + "'";
      fs::remove(tmp, ec);
      return false;
    }
  }
  return true;
}

}  // namespace mdml::codegen
