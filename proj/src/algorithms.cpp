#include "mdml/algorithms.hpp"

#include <sstream>

namespace mdml {

namespace {

bool as_int(const Value& v, std::int64_t& out) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) {
    out = *i;
    return true;
  }
  return false;
}

bool as_number(const Value& v, double& out) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) {
    out = static_cast<double>(*i);
    return true;
  }
  if (const auto* d = std::get_if<double>(&v)) {
    out = *d;
    return true;
  }
  return false;
}

std::string kind_description(const HyperSchema& schema) {
  switch (schema.kind) {
    case HyperKind::PositiveInt: return "a positive integer";
    case HyperKind::NonNegativeInt: return "a non-negative integer";
    case HyperKind::PositiveIntList: return "one or more positive integers";
    case HyperKind::PositiveFloat: return "a positive number";
    case HyperKind::UnitFloat: return "a number strictly between 0 and 1";
    case HyperKind::Choice: {
      std::ostringstream out;
      out << "one of";
      for (std::size_t i = 0; i < schema.choices.size(); ++i)
        out << (i ? ", " : " ") << schema.choices[i];
      return out.str();
    }
  }
  return "a value";
}

}  // namespace

const HyperSchema* AlgorithmSchema::find_param(const std::string& name) const {
  for (const auto& p : params)
    if (p.name == name) return &p;
  return nullptr;
}

const std::vector<AlgorithmSchema>& algorithm_registry() {
  static const std::vector<AlgorithmSchema> registry = {
      AlgorithmSchema{
          "mlp",
          {
              {"hidden_layer_sizes", HyperKind::PositiveIntList, {}},
              {"activation", HyperKind::Choice, {"relu", "sigmoid", "linear"}},
              {"learning_rate", HyperKind::PositiveFloat, {}},
              {"batch_size", HyperKind::PositiveInt, {}},
              {"epochs", HyperKind::PositiveInt, {}},
              {"patience", HyperKind::NonNegativeInt, {}},
              {"seed", HyperKind::NonNegativeInt, {}},
              {"validation_fraction", HyperKind::UnitFloat, {}},
          },
      },
  };
  return registry;
}

const AlgorithmSchema* find_algorithm(const std::string& name) {
  for (const auto& a : algorithm_registry())
    if (a.name == name) return &a;
  return nullptr;
}

std::vector<std::string> algorithm_names() {
  std::vector<std::string> names;
  for (const auto& a : algorithm_registry()) names.push_back(a.name);
  return names;
}

std::optional<std::string> check_hyperparameter(const HyperSchema& schema,
                                                const Hyperparameter& hp) {
  auto mismatch = [&] {
    return "hyperparameter '" + hp.name + "' expects " + kind_description(schema);
  };
  if (hp.values.empty()) return mismatch();
  if (schema.kind != HyperKind::PositiveIntList && hp.values.size() != 1)
    return "hyperparameter '" + hp.name + "' takes a single value";

  switch (schema.kind) {
    case HyperKind::PositiveIntList:
      for (const auto& v : hp.values) {
        std::int64_t i = 0;
        if (!as_int(v, i) || i <= 0) return mismatch();
      }
      return std::nullopt;
    case HyperKind::PositiveInt: {
      std::int64_t i = 0;
      if (!as_int(hp.values[0], i) || i <= 0) return mismatch();
      return std::nullopt;
    }
    case HyperKind::NonNegativeInt: {
      std::int64_t i = 0;
      if (!as_int(hp.values[0], i) || i < 0) return mismatch();
      return std::nullopt;
    }
    case HyperKind::PositiveFloat: {
      double d = 0;
      if (!as_number(hp.values[0], d) || !(d > 0)) return mismatch();
      return std::nullopt;
    }
    case HyperKind::UnitFloat: {
      double d = 0;
      if (!as_number(hp.values[0], d) || !(d > 0 && d < 1)) return mismatch();
      return std::nullopt;
    }
    case HyperKind::Choice: {
      const auto* s = std::get_if<std::string>(&hp.values[0]);
      std::string word;
      if (s) {
        word = *s;
      } else {
        return mismatch();
      }
      for (const auto& c : schema.choices)
        if (c == word) return std::nullopt;
      return mismatch();
    }
  }
  return std::nullopt;
}

}  // namespace mdml
