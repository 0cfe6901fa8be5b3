#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mdml/ast.hpp"
#include "mdml/diagnostics.hpp"

namespace mdml {

// One external stimulus: a message arriving on a port. Args map positionally
// onto the message's declared parameters.
struct Event {
  std::string port;
  std::string message;
  std::vector<Value> args;
};

struct EmittedMessage {
  std::string port;
  std::string message;
  std::vector<Value> args;

  std::string to_string() const;
  bool operator==(const EmittedMessage&) const = default;
};

struct StateTrace {
  std::vector<std::string> states;  // begins with the initial state
  std::vector<EmittedMessage> emitted;
  std::size_t steps = 0;  // transitions fired
};

struct SimulationResult {
  StateTrace trace;
  std::vector<Diagnostic> errors;

  bool ok() const { return errors.empty(); }
};

// Runs the thing's statechart over the event sequence. Events are consumed
// FIFO; per event the first declared transition whose source, trigger and
// guard all match fires; events matching nothing are dropped. Guard or action
// evaluation failure stops the run with an error naming the transition.
SimulationResult simulate_statechart(const Thing& thing, const std::vector<Event>& events);

}  // namespace mdml
