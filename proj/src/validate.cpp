#include "mdml/validate.hpp"

#include <algorithm>
#include <set>
#include <string>

namespace mdml {

namespace {

class Validator {
 public:
  explicit Validator(const SourceModel& model) : model_(model) {}

  std::vector<Diagnostic> run() {
    check_unique_names();
    for (const auto& thing : model_.things) check_thing(thing);
    for (const auto& conf : model_.configurations) check_configuration(conf);
    return std::move(diags_);
  }

 private:
  void report(const std::string& node, const std::string& message,
              const SourceLocation& loc, Severity sev = Severity::Error) {
    diags_.push_back(Diagnostic{sev, node, message, loc});
  }

  void check_unique_names() {
    std::set<std::string> seen;
    for (const auto& thing : model_.things) {
      if (!seen.insert(thing.name).second)
        report("thing " + thing.name, "duplicate thing name '" + thing.name + "'",
               thing.loc);
    }
    seen.clear();
    for (const auto& conf : model_.configurations) {
      if (!seen.insert(conf.name).second)
        report("configuration " + conf.name,
               "duplicate configuration name '" + conf.name + "'", conf.loc);
    }
  }

  void check_thing(const Thing& thing) {
    const std::string node = "thing " + thing.name;

    std::set<std::string> names;
    for (const auto& p : thing.properties)
      if (!names.insert(p.name).second)
        report(node + "/property " + p.name, "duplicate property name '" + p.name + "'",
               p.loc);
    names.clear();
    for (const auto& m : thing.messages)
      if (!names.insert(m.name).second)
        report(node + "/message " + m.name, "duplicate message name '" + m.name + "'",
               m.loc);
    names.clear();
    for (const auto& port : thing.ports) {
      if (!names.insert(port.name).second)
        report(node + "/port " + port.name, "duplicate port name '" + port.name + "'",
               port.loc);
      for (const auto& ref : port.sends)
        if (!thing.find_message(ref))
          report(node + "/port " + port.name,
                 "port sends undeclared message '" + ref + "'", port.loc);
      for (const auto& ref : port.receives)
        if (!thing.find_message(ref))
          report(node + "/port " + port.name,
                 "port receives undeclared message '" + ref + "'", port.loc);
    }

    if (thing.statechart) check_statechart(thing, *thing.statechart);
    if (thing.analytics) check_analytics(thing, *thing.analytics);
  }

  void check_statechart(const Thing& thing, const Statechart& chart) {
    const std::string node = "thing " + thing.name + "/statechart " + chart.name;

    std::set<std::string> state_names;
    for (const auto& s : chart.states)
      if (!state_names.insert(s.name).second)
        report(node + "/state " + s.name, "duplicate state name '" + s.name + "'", s.loc);

    if (!chart.find_state(chart.initial))
      report(node, "initial state '" + chart.initial + "' is not declared", chart.loc);

    for (const auto& tr : chart.transitions) {
      const std::string tr_node = node + "/transition " + tr.describe();
      if (!chart.find_state(tr.source))
        report(tr_node, "transition source '" + tr.source + "' is not a declared state",
               tr.loc);
      if (!chart.find_state(tr.target))
        report(tr_node, "transition target '" + tr.target + "' is not a declared state",
               tr.loc);
      const Port* port = thing.find_port(tr.trigger.port);
      if (!port) {
        report(tr_node, "trigger references undeclared port '" + tr.trigger.port + "'",
               tr.loc);
      } else if (std::find(port->receives.begin(), port->receives.end(),
                           tr.trigger.message) == port->receives.end()) {
        report(tr_node,
               "trigger message '" + tr.trigger.message + "' is not received by port '" +
                   tr.trigger.port + "'",
               tr.loc);
      }
    }
  }

  void check_analytics(const Thing& thing, const DataAnalyticsSpec& spec) {
    const std::string node = "thing " + thing.name + "/data_analytics " + spec.name;
    for (const auto& f : spec.features)
      if (!thing.find_property(f))
        report(node, "feature references undeclared property '" + f + "'", spec.loc);
    if (!spec.prediction_results.empty() && !thing.find_property(spec.prediction_results))
      report(node,
             "prediction_results references undeclared property '" +
                 spec.prediction_results + "'",
             spec.loc);
  }

  void check_configuration(const Configuration& conf) {
    const std::string node = "configuration " + conf.name;

    std::set<std::string> names;
    for (const auto& inst : conf.instances)
      if (!names.insert(inst.name).second)
        report(node + "/instance " + inst.name,
               "duplicate instance name '" + inst.name + "'", inst.loc);

    for (const auto& conn : conf.connectors) {
      for (const ConnectorEnd* end : {&conn.from, &conn.to}) {
        const Instance* inst = conf.find_instance(end->instance);
        if (!inst) {
          report(node, "connector references undeclared instance '" + end->instance + "'",
                 conn.loc);
          continue;
        }
        // Port existence is checkable only when the thing is in this model;
        // unresolved things are the linker's responsibility.
        const Thing* thing = model_.find_thing(inst->thing);
        if (thing && !thing->find_port(end->port))
          report(node,
                 "connector references undeclared port '" + end->instance + "." +
                     end->port + "'",
                 conn.loc);
      }
    }
  }

  const SourceModel& model_;
  std::vector<Diagnostic> diags_;
};

}  // namespace

std::vector<Diagnostic> validate_structure(const SourceModel& model) {
  return Validator(model).run();
}

}  // namespace mdml
