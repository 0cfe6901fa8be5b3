#include "mdml/linker.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mdml/algorithms.hpp"
#include "mdml/parser.hpp"
#include "mdml/validate.hpp"

namespace mdml {

namespace {

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ", ";
    out += parts[i];
  }
  return out;
}

bool node_exists(const SourceModel& m, const std::string& path) {
  if (path.empty()) return true;
  auto dot = path.find('.');
  std::string head = path.substr(0, dot);
  const Thing* t = m.find_thing(head);
  const Configuration* c = m.find_configuration(head);
  if (dot == std::string::npos) return t != nullptr || c != nullptr;
  std::string member = path.substr(dot + 1);
  if (t)
    return t->find_property(member) || t->find_message(member) || t->find_port(member);
  if (c) return c->find_instance(member) != nullptr;
  return false;
}

void apply_effective(LinkedModel& out, const std::string& node, const Annotation& ann) {
  auto& list = out.effective_annotations[node];
  for (auto& existing : list) {
    if (existing.key == ann.key) {
      existing = ann;  // later writers replace earlier ones
      return;
    }
  }
  list.push_back(ann);
}

void index_thing(LinkedModel& out, const Thing& t, const std::string& file) {
  out.provenance[t.name] = file;
  for (const auto& ann : t.annotations) apply_effective(out, t.name, ann);
  for (const auto& p : t.properties)
    for (const auto& ann : p.annotations) apply_effective(out, t.name + "." + p.name, ann);
  for (const auto& m : t.messages)
    for (const auto& ann : m.annotations) apply_effective(out, t.name + "." + m.name, ann);
  for (const auto& p : t.ports)
    for (const auto& ann : p.annotations) apply_effective(out, t.name + "." + p.name, ann);
}

void index_configuration(LinkedModel& out, const Configuration& c, const std::string& file) {
  out.provenance[c.name] = file;
  for (const auto& ann : c.annotations) apply_effective(out, c.name, ann);
  for (const auto& inst : c.instances) {
    out.references[c.name + "." + inst.name] = inst.thing;
    for (const auto& ann : inst.annotations)
      apply_effective(out, c.name + "." + inst.name, ann);
  }
}

struct LinkContext {
  const FileLoader& loader;
  std::vector<Diagnostic>& diags;
  LinkedModel out;
  std::vector<std::string> done;
  std::vector<std::string> stack;

  void error(const std::string& node, const std::string& message, SourceLocation loc = {}) {
    diags.push_back({Severity::Error, node, message, std::move(loc)});
  }
};

std::string resolve_relative(const std::string& importer, const std::string& target) {
  std::filesystem::path p(importer);
  p = p.parent_path() / target;
  return p.lexically_normal().generic_string();
}

// Root-level annotations attach to the node named by their `on` clause, or
// to the model root when there is none.
void apply_root_annotations(LinkContext& ctx, const SourceModel& model,
                            const std::string& file) {
  for (const auto& ann : model.annotations) {
    if (!node_exists(ctx.out.merged, ann.target)) {
      SourceLocation loc = ann.loc;
      if (loc.file.empty()) loc.file = file;
      ctx.error("@" + ann.key, "annotation target '" + ann.target + "' does not exist", loc);
      continue;
    }
    apply_effective(ctx.out, ann.target, ann);
  }
}

void merge_file(LinkContext& ctx, const std::string& file, const SourceModel& model) {
  for (const auto& t : model.things) {
    if (ctx.out.merged.find_thing(t.name)) {
      ctx.error("thing " + t.name,
                "thing '" + t.name + "' is defined in both '" + ctx.out.provenance[t.name] +
                    "' and '" + file + "'",
                t.loc);
      continue;
    }
    ctx.out.merged.things.push_back(t);
    index_thing(ctx.out, t, file);
  }
  for (const auto& c : model.configurations) {
    if (ctx.out.merged.find_configuration(c.name)) {
      ctx.error("configuration " + c.name,
                "configuration '" + c.name + "' is defined in both '" +
                    ctx.out.provenance[c.name] + "' and '" + file + "'",
                c.loc);
      continue;
    }
    ctx.out.merged.configurations.push_back(c);
    index_configuration(ctx.out, c, file);
  }
  for (const auto& ann : model.annotations) ctx.out.merged.annotations.push_back(ann);
  apply_root_annotations(ctx, model, file);
}

bool link_file(LinkContext& ctx, const std::string& file) {
  if (std::find(ctx.done.begin(), ctx.done.end(), file) != ctx.done.end()) return true;
  if (std::find(ctx.stack.begin(), ctx.stack.end(), file) != ctx.stack.end()) {
    ctx.error("import", "import cycle involving '" + file + "'", {file, 0, 0});
    return false;
  }

  auto text = ctx.loader(file);
  if (!text) {
    ctx.error("import", "cannot read '" + file + "'", {file, 0, 0});
    ctx.done.push_back(file);
    return false;
  }
  ParseResult parsed = parse(*text, file);
  if (!parsed.ok()) {
    for (auto& d : parsed.diagnostics()) ctx.diags.push_back(std::move(d));
    ctx.done.push_back(file);
    return false;
  }

  ctx.stack.push_back(file);
  bool ok = true;
  for (const auto& import : parsed.model.imports)
    ok = link_file(ctx, resolve_relative(file, import)) && ok;
  ctx.stack.pop_back();
  ctx.done.push_back(file);

  if (ok) merge_file(ctx, file, parsed.model);
  return ok && !has_errors(ctx.diags);
}

}  // namespace

FileLoader filesystem_loader() {
  return [](const std::string& path) -> std::optional<std::string> {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };
}

std::optional<LinkedModel> resolve_imports(const std::string& entry_path,
                                           const FileLoader& loader,
                                           std::vector<Diagnostic>& diags) {
  std::string entry = std::filesystem::path(entry_path).lexically_normal().generic_string();
  LinkContext ctx{loader, diags, {}, {}, {}};
  ctx.out.provenance[""] = entry;

  if (!link_file(ctx, entry) || has_errors(diags)) return std::nullopt;
  return std::move(ctx.out);
}

std::optional<LinkedModel> compose_psm(const SourceModel& pim, const SourceModel& overlay,
                                       std::vector<Diagnostic>& diags) {
  auto error = [&](const std::string& node, const std::string& message, SourceLocation loc) {
    diags.push_back({Severity::Error, node, message, std::move(loc)});
  };

  if (pim.kind() != ModelKind::Pim) {
    error("model", "the base model must be a PIM, but it declares configurations", {});
    return std::nullopt;
  }
  bool ok = true;
  for (const auto& t : overlay.things) {
    error("thing " + t.name, "PSM overlay must not define things", t.loc);
    ok = false;
  }
  if (!ok) return std::nullopt;

  LinkedModel out;
  out.merged = pim;
  for (const auto& t : pim.things) index_thing(out, t, "<pim>");
  for (const auto& ann : pim.annotations) {
    if (!node_exists(out.merged, ann.target)) {
      error("@" + ann.key, "annotation target '" + ann.target + "' does not exist", ann.loc);
      continue;
    }
    apply_effective(out, ann.target, ann);
  }

  for (const auto& c : overlay.configurations) {
    if (out.merged.find_configuration(c.name)) {
      error("configuration " + c.name, "duplicate configuration '" + c.name + "'", c.loc);
      continue;
    }
    out.merged.configurations.push_back(c);
    index_configuration(out, c, "<overlay>");
  }

  // Overlay annotations live only in the effective table; stripping the
  // configurations back off must recover the PIM byte for byte.
  for (const auto& ann : overlay.annotations) {
    if (!node_exists(out.merged, ann.target)) {
      error("@" + ann.key, "annotation target '" + ann.target + "' does not exist", ann.loc);
      continue;
    }
    apply_effective(out, ann.target, ann);
  }

  if (has_errors(diags)) return std::nullopt;
  return out;
}

SourceModel strip(const LinkedModel& model) {
  SourceModel out = model.merged;
  out.configurations.clear();
  return out;
}

const Annotation* effective_annotation(const LinkedModel& model, const std::string& node_path,
                                       const std::string& key) {
  auto it = model.effective_annotations.find(node_path);
  if (it == model.effective_annotations.end()) return nullptr;
  for (const auto& ann : it->second)
    if (ann.key == key) return &ann;
  return nullptr;
}

namespace {

void check_analytics(const LinkedModel& model, const Thing& t,
                     std::vector<Diagnostic>& diags) {
  (void)model;
  const DataAnalyticsSpec& da = *t.analytics;
  std::string node = "thing " + t.name + "/data_analytics " + da.name;
  auto error = [&](const std::string& message, SourceLocation loc) {
    diags.push_back({Severity::Error, node, message, std::move(loc)});
  };

  auto check_column = [&](const std::string& name, const char* role) {
    const Property* p = t.find_property(name);
    if (!p) return;  // undeclared names are reported structurally
    if (p->type.scalar == ScalarType::String)
      error(std::string(role) + " '" + name + "' must be numeric or boolean, got String",
            da.loc);
    else if (p->type.is_array() && p->type.width() == 0)
      error(std::string(role) + " '" + name + "' has an unsized array type", da.loc);
  };
  for (const auto& f : da.features) check_column(f, "feature");
  if (!da.prediction_results.empty()) check_column(da.prediction_results, "prediction_results");

  if (da.labels == LabelsMode::On && da.dataset.empty())
    error("labels ON requires a dataset to supply the label column", da.loc);

  if (!da.algorithm.empty()) {
    const AlgorithmSchema* schema = find_algorithm(da.algorithm);
    if (!schema) {
      error("unknown algorithm '" + da.algorithm + "' (known: " + join(algorithm_names()) +
                ")",
            da.loc);
      return;
    }
    for (const auto& hp : da.hyperparameters) {
      const HyperSchema* ps = schema->find_param(hp.name);
      if (!ps) {
        error("algorithm '" + da.algorithm + "' has no hyperparameter '" + hp.name + "'",
              hp.loc);
        continue;
      }
      if (auto msg = check_hyperparameter(*ps, hp)) error(*msg, hp.loc);
    }
  }
}

void check_configuration(const LinkedModel& model, const Configuration& c,
                         const std::vector<platform::PlatformProfile>& platforms,
                         std::vector<Diagnostic>& diags) {
  std::string node = "configuration " + c.name;
  auto error = [&](const std::string& n, const std::string& message, SourceLocation loc) {
    diags.push_back({Severity::Error, n, message, std::move(loc)});
  };

  if (c.instances.empty())
    error(node, "configuration '" + c.name + "' instantiates no things", c.loc);

  int declared = 0;
  for (const auto& ann : c.annotations)
    if (ann.key == "compiler") ++declared;
  if (declared > 1)
    error(node, "configuration '" + c.name + "' has multiple @compiler annotations", c.loc);
  const Annotation* compiler = effective_annotation(model, c.name, "compiler");
  if (!compiler) {
    error(node, "configuration '" + c.name + "' needs a @compiler annotation", c.loc);
  } else if (!platform::find_platform(platforms, compiler->value)) {
    error(node,
          "unknown compiler target '" + compiler->value +
              "' (valid: " + join(platform::platform_ids(platforms)) + ")",
          compiler->loc.valid() ? compiler->loc : c.loc);
  }

  for (const auto& inst : c.instances) {
    if (!model.merged.find_thing(inst.thing))
      error(node + "/instance " + inst.name,
            "instance '" + inst.name + "' references unknown thing '" + inst.thing + "'",
            inst.loc);
  }

  for (const auto& conn : c.connectors) {
    const Instance* fi = c.find_instance(conn.from.instance);
    const Instance* ti = c.find_instance(conn.to.instance);
    if (!fi || !ti) continue;
    const Thing* ft = model.merged.find_thing(fi->thing);
    const Thing* tt = model.merged.find_thing(ti->thing);
    if (!ft || !tt) continue;
    const Port* fp = ft->find_port(conn.from.port);
    const Port* tp = tt->find_port(conn.to.port);
    if (!fp || !tp) continue;  // undeclared ports are reported structurally

    std::string cnode = node + "/connector " + conn.from.instance + "." + conn.from.port +
                        " => " + conn.to.instance + "." + conn.to.port;

    auto has = [](const std::vector<std::string>& list, const std::string& name) {
      return std::find(list.begin(), list.end(), name) != list.end();
    };
    auto check_direction = [&](const Port& sender, const Port& receiver,
                               const ConnectorEnd& se, const ConnectorEnd& re) {
      for (const auto& m : sender.sends) {
        if (!has(receiver.receives, m))
          error(cnode,
                "message '" + m + "' sent by '" + se.instance + "." + se.port +
                    "' is not received by '" + re.instance + "." + re.port + "'",
                conn.loc);
      }
    };
    check_direction(*fp, *tp, conn.from, conn.to);
    check_direction(*tp, *fp, conn.to, conn.from);

    // Messages that flow either way must agree on their parameter lists.
    std::vector<std::string> shared;
    for (const auto& m : fp->sends)
      if (has(tp->receives, m)) shared.push_back(m);
    for (const auto& m : tp->sends)
      if (has(fp->receives, m) && !has(shared, m)) shared.push_back(m);
    for (const auto& name : shared) {
      const Message* fm = ft->find_message(name);
      const Message* tm = tt->find_message(name);
      if (!fm || !tm) continue;
      bool match = fm->params.size() == tm->params.size();
      for (std::size_t i = 0; match && i < fm->params.size(); ++i)
        match = fm->params[i].type == tm->params[i].type;
      if (!match)
        error(cnode,
              "message '" + name + "' has different parameters in '" + ft->name + "' and '" +
                  tt->name + "'",
              conn.loc);
    }
  }
}

}  // namespace

std::vector<Diagnostic> check_semantics(const LinkedModel& model,
                                        const std::vector<platform::PlatformProfile>& platforms) {
  std::vector<Diagnostic> diags = validate_structure(model.merged);

  for (const auto& t : model.merged.things)
    if (t.analytics) check_analytics(model, t, diags);

  for (const auto& c : model.merged.configurations)
    check_configuration(model, c, platforms, diags);

  return diags;
}

std::optional<std::uint32_t> feature_width(const Thing& thing) {
  if (!thing.analytics) return std::nullopt;
  std::uint32_t total = 0;
  for (const auto& name : thing.analytics->features) {
    const Property* p = thing.find_property(name);
    if (!p) return std::nullopt;
    total += p->type.width();
  }
  return total;
}

namespace {

bool value_as_u64(const Value& v, std::uint64_t& out) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) {
    if (*i < 0) return false;
    out = static_cast<std::uint64_t>(*i);
    return true;
  }
  return false;
}

bool value_as_double(const Value& v, double& out) {
  if (const auto* d = std::get_if<double>(&v)) {
    out = *d;
    return true;
  }
  if (const auto* i = std::get_if<std::int64_t>(&v)) {
    out = static_cast<double>(*i);
    return true;
  }
  return false;
}

}  // namespace

std::optional<TrainingPlan> training_plan(const Thing& thing, std::string* error) {
  auto fail = [&](const std::string& message) -> std::optional<TrainingPlan> {
    if (error) *error = message;
    return std::nullopt;
  };

  if (!thing.analytics)
    return fail("thing '" + thing.name + "' has no data_analytics block");
  const DataAnalyticsSpec& da = *thing.analytics;
  if (da.algorithm.empty())
    return fail("data_analytics '" + da.name + "' declares no model_algorithm");
  const AlgorithmSchema* schema = find_algorithm(da.algorithm);
  if (!schema) return fail("unknown algorithm '" + da.algorithm + "'");

  TrainingPlan plan;
  plan.config.shuffle = !da.sequential;

  auto width = feature_width(thing);
  if (!width || *width == 0)
    return fail("data_analytics '" + da.name + "' has no usable feature columns");
  plan.input_width = *width;

  for (const auto& hp : da.hyperparameters) {
    const HyperSchema* ps = schema->find_param(hp.name);
    if (!ps) return fail("algorithm '" + da.algorithm + "' has no hyperparameter '" + hp.name + "'");
    if (auto msg = check_hyperparameter(*ps, hp)) return fail(*msg);

    std::uint64_t u = 0;
    double d = 0.0;
    if (hp.name == "hidden_layer_sizes") {
      plan.hidden_layers.clear();
      for (const auto& v : hp.values) {
        value_as_u64(v, u);
        plan.hidden_layers.push_back(static_cast<std::uint32_t>(u));
      }
    } else if (hp.name == "activation") {
      plan.hidden_activation = *ml::activation_from_name(std::get<std::string>(hp.values[0]));
    } else if (hp.name == "learning_rate") {
      value_as_double(hp.values[0], d);
      plan.config.learning_rate = d;
    } else if (hp.name == "batch_size") {
      value_as_u64(hp.values[0], u);
      plan.config.batch_size = u;
    } else if (hp.name == "epochs") {
      value_as_u64(hp.values[0], u);
      plan.config.epochs = u;
    } else if (hp.name == "patience") {
      value_as_u64(hp.values[0], u);
      plan.config.patience = u;
    } else if (hp.name == "seed") {
      value_as_u64(hp.values[0], u);
      plan.config.seed = u;
    } else if (hp.name == "validation_fraction") {
      value_as_double(hp.values[0], d);
      plan.config.validation_fraction = d;
    }
  }
  return plan;
}

}  // namespace mdml
