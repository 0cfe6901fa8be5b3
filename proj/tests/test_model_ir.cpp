#include <doctest.h>

#include <string>
#include <vector>

#include "mdml/parser.hpp"
#include "mdml/printer.hpp"
#include "mdml/simulate.hpp"
#include "mdml/validate.hpp"
#include "support/model_gen.hpp"

using namespace mdml;

namespace {

SourceModel parse_ok(const std::string& text) {
  ParseResult r = parse(text, "test.mdml");
  for (const auto& e : r.errors) INFO(e.to_string());
  REQUIRE(r.ok());
  return r.model;
}

const char* toggle_src = R"(
thing Toggle {
  message ping();
  provided port p { receives ping }
  statechart SC init A {
    state A {}
    state B {}
    transition A -> B event p?ping
    transition B -> A event p?ping
  }
}
)";

}  // namespace

TEST_CASE("validate: duplicate thing names") {
  SourceModel m = parse_ok("thing Sensor {}\nthing Sensor {}");
  auto diags = validate_structure(m);
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].severity == Severity::Error);
  CHECK(diags[0].message.find("duplicate thing name") != std::string::npos);
  CHECK(diags[0].location.line == 2);
}

TEST_CASE("validate: resolved PIM produces no diagnostics") {
  SourceModel m = parse_ok(R"(
thing Sensor {
  property level : Double = 0.0;
  message reading(v : Double);
  provided port data { receives reading sends reading }
  statechart SC init Idle {
    state Idle {}
    transition Idle -> Idle event data?reading
  }
  data_analytics da {
    labels ON
    features level
    prediction_results level
    model_algorithm mlp(hidden_layer_sizes 8)
    dataset "d.csv"
  }
}
)");
  CHECK(m.kind() == ModelKind::Pim);
  CHECK(validate_structure(m).empty());
}

TEST_CASE("validate: transition to undeclared state names the transition") {
  SourceModel m = parse_ok(R"(
thing T {
  message m();
  provided port p { receives m }
  statechart SC init Idle {
    state Idle {}
    transition Idle -> Idle2 event p?m
  }
}
)");
  auto diags = validate_structure(m);
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].node.find("transition Idle -> Idle2 event p?m") != std::string::npos);
  CHECK(diags[0].message.find("Idle2") != std::string::npos);
}

TEST_CASE("validate: member name collisions inside a thing") {
  SourceModel m = parse_ok(R"(
thing T {
  property p : Int;
  property p : Int;
  message m();
  message m();
}
)");
  auto diags = validate_structure(m);
  REQUIRE(diags.size() == 2);
  CHECK(diags[0].message.find("duplicate property name 'p'") != std::string::npos);
  CHECK(diags[1].message.find("duplicate message name 'm'") != std::string::npos);
}

TEST_CASE("validate: port lists must reference declared messages") {
  SourceModel m = parse_ok("thing T { message m(); provided port p { receives m, ghost } }");
  auto diags = validate_structure(m);
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].message.find("undeclared message 'ghost'") != std::string::npos);
}

TEST_CASE("validate: trigger must be received by the named port") {
  SourceModel m = parse_ok(R"(
thing T {
  message a();
  message b();
  provided port p { receives a sends b }
  statechart SC init S {
    state S {}
    transition S -> S event p?b
  }
}
)");
  auto diags = validate_structure(m);
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].message.find("not received by port 'p'") != std::string::npos);
}

TEST_CASE("validate: undeclared initial state") {
  SourceModel m = parse_ok(R"(
thing T {
  statechart SC init Missing { state S {} }
}
)");
  auto diags = validate_structure(m);
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].message.find("initial state 'Missing'") != std::string::npos);
}

TEST_CASE("validate: analytics refs resolve to properties") {
  SourceModel m = parse_ok(R"(
thing T {
  property x : Double;
  data_analytics da {
    features x, ghost
    prediction_results phantom
  }
}
)");
  auto diags = validate_structure(m);
  REQUIRE(diags.size() == 2);
  CHECK(diags[0].message.find("'ghost'") != std::string::npos);
  CHECK(diags[1].message.find("'phantom'") != std::string::npos);
}

TEST_CASE("validate: connector endpoints") {
  SourceModel m = parse_ok(R"(
thing T { message m(); provided port p { receives m } }
configuration C {
  instance a : T;
  connector a.p => ghost.p;
  connector a.p => a.q;
}
)");
  auto diags = validate_structure(m);
  REQUIRE(diags.size() == 2);
  CHECK(diags[0].message.find("undeclared instance 'ghost'") != std::string::npos);
  CHECK(diags[1].message.find("undeclared port 'a.q'") != std::string::npos);
}

TEST_CASE("validate: duplicate configuration and instance names") {
  SourceModel m = parse_ok(R"(
thing T {}
configuration C { instance i : T; instance i : T; }
configuration C {}
)");
  auto diags = validate_structure(m);
  REQUIRE(diags.size() == 2);
  CHECK(diags[0].message.find("duplicate configuration name 'C'") != std::string::npos);
  CHECK(diags[1].message.find("duplicate instance name 'i'") != std::string::npos);
}

TEST_CASE("validate: pure and idempotent") {
  SourceModel m = parse_ok("thing Sensor {}\nthing Sensor {}");
  auto a = validate_structure(m);
  auto b = validate_structure(m);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].to_string() == b[i].to_string());
}

TEST_CASE("property: generated models validate cleanly") {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    mdml::testing::ModelGen gen(seed);
    SourceModel m = gen.model();
    auto diags = validate_structure(m);
    if (!diags.empty()) {
      CAPTURE(seed);
      CAPTURE(pretty_print(m));
      INFO(diags[0].to_string());
      CHECK(diags.empty());
    }
  }
}

TEST_CASE("simulate: empty event list gives the initial state only") {
  SourceModel m = parse_ok(toggle_src);
  auto r = simulate_statechart(m.things[0], {});
  REQUIRE(r.ok());
  CHECK(r.trace.states == std::vector<std::string>{"A"});
  CHECK(r.trace.steps == 0);
}

TEST_CASE("simulate: two-state toggle") {
  SourceModel m = parse_ok(toggle_src);
  auto r = simulate_statechart(m.things[0], {{"p", "ping", {}}, {"p", "ping", {}}});
  REQUIRE(r.ok());
  CHECK(r.trace.states == std::vector<std::string>{"A", "B", "A"});
  CHECK(r.trace.steps == 2);
}

TEST_CASE("simulate: competing transitions follow declaration order") {
  // Hand-executed oracle over the transition table:
  //   A+go  -> tr1 (A->B) beats tr2 (A->C)
  //   B+go  -> tr3 guard false, tr4 (B->A) fires
  //   A+go  -> tr1 again
  //   B+reset -> nothing declared, dropped
  SourceModel m = parse_ok(R"(
thing M {
  message go();
  message reset();
  provided port ctl { receives go, reset }
  statechart SC init A {
    state A {}
    state B {}
    state C {}
    transition A -> B event ctl?go
    transition A -> C event ctl?go
    transition B -> C event ctl?go guard 1 > 2
    transition B -> A event ctl?go
    transition C -> A event ctl?reset
  }
}
)");
  std::vector<Event> events = {
      {"ctl", "go", {}}, {"ctl", "go", {}}, {"ctl", "go", {}}, {"ctl", "reset", {}}};
  auto r = simulate_statechart(m.things[0], events);
  REQUIRE(r.ok());
  CHECK(r.trace.states == std::vector<std::string>{"A", "B", "A", "B"});
  CHECK(r.trace.steps == 3);
}

TEST_CASE("simulate: guards read properties and message params") {
  SourceModel m = parse_ok(R"(
thing T {
  property threshold : Double = 0.5;
  message sample(v : Double);
  provided port in { receives sample }
  statechart SC init Ok {
    state Ok {}
    state Alarm {}
    transition Ok -> Alarm event in?sample guard v > threshold
    transition Alarm -> Ok event in?sample guard v <= threshold
  }
}
)");
  std::vector<Event> events = {{"in", "sample", {Value{0.4}}},
                               {"in", "sample", {Value{0.9}}},
                               {"in", "sample", {Value{0.1}}}};
  auto r = simulate_statechart(m.things[0], events);
  REQUIRE(r.ok());
  CHECK(r.trace.states == std::vector<std::string>{"Ok", "Alarm", "Ok"});
}

TEST_CASE("simulate: set actions persist and on-entry sends are recorded") {
  SourceModel m = parse_ok(R"(
thing T {
  property count : Int = 0;
  message tick();
  message alert(n : Int);
  provided port in { receives tick }
  required port out { sends alert }
  statechart SC init S {
    state S {
      on entry send out!alert(count)
    }
    transition S -> S event in?tick guard count < 2 { set count = count + 1 }
  }
}
)");
  std::vector<Event> events = {{"in", "tick", {}}, {"in", "tick", {}}, {"in", "tick", {}}};
  auto r = simulate_statechart(m.things[0], events);
  REQUIRE(r.ok());
  // third tick: guard count < 2 now false, event dropped
  CHECK(r.trace.states == std::vector<std::string>{"S", "S", "S"});
  REQUIRE(r.trace.emitted.size() == 3);
  CHECK(r.trace.emitted[0].to_string() == "out!alert(0)");
  CHECK(r.trace.emitted[1].to_string() == "out!alert(1)");
  CHECK(r.trace.emitted[2].to_string() == "out!alert(2)");
}

TEST_CASE("simulate: guard failure names the transition") {
  SourceModel m = parse_ok(R"(
thing T {
  message m();
  provided port p { receives m }
  statechart SC init A {
    state A {}
    state B {}
    transition A -> B event p?m guard zzz > 1
  }
}
)");
  auto r = simulate_statechart(m.things[0], {{"p", "m", {}}});
  REQUIRE(!r.ok());
  CHECK(r.errors[0].node.find("transition A -> B event p?m") != std::string::npos);
  CHECK(r.errors[0].message.find("guard evaluation failed") != std::string::npos);
  CHECK(r.errors[0].message.find("zzz") != std::string::npos);
}

TEST_CASE("simulate: thing without a statechart is an error") {
  SourceModel m = parse_ok("thing T {}");
  auto r = simulate_statechart(m.things[0], {});
  CHECK(!r.ok());
}

TEST_CASE("property: trace bounds and determinism over generated machines") {
  for (std::uint64_t seed = 1; seed <= 150; ++seed) {
    mdml::testing::ModelGen gen(seed);
    SourceModel m = gen.model();
    for (const auto& thing : m.things) {
      if (!thing.statechart) continue;
      // build an event stream from the thing's own receivable messages
      std::vector<Event> events;
      for (const auto& port : thing.ports)
        for (const auto& msg : port.receives) {
          Event e{port.name, msg, {}};
          if (const Message* decl = thing.find_message(msg))
            for (const auto& param : decl->params) {
              (void)param;
              e.args.push_back(Value{static_cast<std::int64_t>(seed % 7)});
            }
          events.push_back(e);
          events.push_back(std::move(e));
        }
      auto r1 = simulate_statechart(thing, events);
      auto r2 = simulate_statechart(thing, events);
      CHECK(r1.trace.states.size() <= 1 + events.size());
      CHECK(r1.trace.steps + 1 == r1.trace.states.size());
      CHECK(r1.trace.states == r2.trace.states);
      CHECK(r1.trace.emitted == r2.trace.emitted);
      CHECK(r1.errors.size() == r2.errors.size());
      if (r1.ok()) CHECK(r1.trace.states[0] == thing.statechart->initial);
    }
  }
}
