#include "mdml/platform.hpp"

#include <cctype>
#include <cmath>

#include <json.hpp>

#include "mdml/conv/carray.hpp"
#include "mdml/conv/serialize.hpp"

namespace mdml::platform {

const std::vector<PlatformProfile>& builtin_registry() {
  static const std::vector<PlatformProfile> registry = [] {
    std::vector<PlatformProfile> r;

    PlatformProfile host;
    host.id = "python_java";
    host.display_name = "Python / Java host";
    r.push_back(host);

    PlatformProfile rpi;
    rpi.id = "rpi_3b+_python";
    rpi.display_name = "Raspberry Pi 3 B+ (Python)";
    rpi.ram_bytes = 1024ull * 1024 * 1024;
    rpi.clock_hz = 1400ull * 1000 * 1000;
    r.push_back(rpi);

    PlatformProfile rpi_q = rpi;
    rpi_q.id = "rpi_3b+_python_quantized";
    rpi_q.display_name = "Raspberry Pi 3 B+ (Python, quantized)";
    rpi_q.quantized = true;
    r.push_back(rpi_q);

    PlatformProfile nano;
    nano.id = "arduino_nano_33_ble_sense_cpp";
    nano.display_name = "Arduino Nano 33 BLE Sense (C++)";
    nano.ram_bytes = 256ull * 1024;
    nano.flash_bytes = 1024ull * 1024;
    nano.clock_hz = 64ull * 1000 * 1000;
    nano.quantized = true;
    r.push_back(nano);

    return r;
  }();
  return registry;
}

const PlatformProfile* find_platform(const std::vector<PlatformProfile>& registry,
                                     const std::string& id) {
  for (const auto& p : registry)
    if (p.id == id) return &p;
  return nullptr;
}

std::vector<std::string> platform_ids(const std::vector<PlatformProfile>& registry) {
  std::vector<std::string> ids;
  ids.reserve(registry.size());
  for (const auto& p : registry) ids.push_back(p.id);
  return ids;
}

std::optional<SizeReport> estimate_sizes(const ml::MlpArchitecture& arch) {
  if (!arch.valid()) return std::nullopt;

  SizeReport report;
  for (std::size_t l = 0; l + 1 < arch.dims.size(); ++l) {
    std::uint64_t weights;
    if (__builtin_mul_overflow(std::uint64_t(arch.dims[l]), std::uint64_t(arch.dims[l + 1]),
                               &weights))
      return std::nullopt;
    if (__builtin_add_overflow(report.param_count, weights, &report.param_count))
      return std::nullopt;
    if (__builtin_add_overflow(report.param_count, std::uint64_t(arch.dims[l + 1]),
                               &report.param_count))
      return std::nullopt;

    std::uint64_t pair = std::uint64_t(arch.dims[l]) + arch.dims[l + 1];
    if (pair * 4 > report.arena_bytes) report.arena_bytes = pair * 4;
  }

  auto fsize = conv::float_size_bytes(arch);
  auto qsize = conv::quantized_size_bytes(arch);
  if (!fsize || !qsize) return std::nullopt;
  report.float_bytes = *fsize;
  report.quantized_bytes = *qsize;
  report.carray_bytes = conv::carray_size_bytes(*qsize, "model_data");
  report.expansion_ratio =
      static_cast<double>(report.carray_bytes) / static_cast<double>(report.quantized_bytes);
  return report;
}

DeployDecision check_deployability(const SizeReport& sizes, const PlatformProfile& profile,
                                   DeployPolicy policy) {
  DeployDecision decision;

  if (policy == DeployPolicy::PaperCompat) {
    if (!profile.flash_bytes) return decision;
    decision.binding_constraint = "flash";
    if (sizes.carray_bytes > *profile.flash_bytes) {
      decision.accepted = false;
      decision.margin_bytes = sizes.carray_bytes - *profile.flash_bytes;
    } else {
      decision.margin_bytes = *profile.flash_bytes - sizes.carray_bytes;
    }
    return decision;
  }

  std::uint64_t model_bytes = profile.quantized ? sizes.quantized_bytes : sizes.float_bytes;

  if (profile.flash_bytes) {
    std::uint64_t need = model_bytes + profile.program_reserve_bytes;
    if (need > *profile.flash_bytes)
      return {false, "flash", need - *profile.flash_bytes};
  }
  if (profile.ram_bytes) {
    std::uint64_t need = model_bytes + sizes.arena_bytes;
    if (need > *profile.ram_bytes) return {false, "ram", need - *profile.ram_bytes};
  }

  bool any = false;
  std::uint64_t best = 0;
  if (profile.flash_bytes) {
    best = *profile.flash_bytes - (model_bytes + profile.program_reserve_bytes);
    decision.binding_constraint = "flash";
    any = true;
  }
  if (profile.ram_bytes) {
    std::uint64_t head = *profile.ram_bytes - (model_bytes + sizes.arena_bytes);
    if (!any || head < best) {
      best = head;
      decision.binding_constraint = "ram";
      any = true;
    }
  }
  if (any) decision.margin_bytes = best;
  return decision;
}

namespace {

bool parse_scaled(const nlohmann::json& v, bool clock, std::uint64_t& out, std::string& why) {
  if (v.is_number_unsigned() || v.is_number_integer()) {
    if (v.get<std::int64_t>() < 0) {
      why = "must not be negative";
      return false;
    }
    out = v.get<std::uint64_t>();
    return true;
  }
  if (!v.is_string()) {
    why = "must be a number or a suffixed string";
    return false;
  }

  const std::string text = v.get<std::string>();
  std::size_t pos = 0;
  while (pos < text.size() &&
         (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.'))
    ++pos;
  if (pos == 0) {
    why = "'" + text + "' does not start with a number";
    return false;
  }
  double value = std::stod(text.substr(0, pos));
  std::string suffix = text.substr(pos);
  while (!suffix.empty() && suffix.front() == ' ') suffix.erase(suffix.begin());

  double scale = 1.0;
  if (clock) {
    if (suffix == "Hz" || suffix.empty()) scale = 1.0;
    else if (suffix == "kHz") scale = 1e3;
    else if (suffix == "MHz") scale = 1e6;
    else if (suffix == "GHz") scale = 1e9;
    else {
      why = "unknown clock suffix '" + suffix + "'";
      return false;
    }
  } else {
    if (suffix.empty() || suffix == "B") scale = 1.0;
    else if (suffix == "KB") scale = 1e3;
    else if (suffix == "MB") scale = 1e6;
    else if (suffix == "KiB") scale = 1024.0;
    else if (suffix == "MiB") scale = 1024.0 * 1024.0;
    else {
      why = "unknown size suffix '" + suffix + "'";
      return false;
    }
  }
  out = static_cast<std::uint64_t>(std::llround(value * scale));
  return true;
}

}  // namespace

std::optional<std::vector<PlatformProfile>> load_platforms_json(const std::string& text,
                                                                std::string* error) {
  auto fail = [&](const std::string& msg) {
    if (error) *error = msg;
    return std::nullopt;
  };

  nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded()) return fail("platform file is not valid JSON");
  if (!doc.is_array()) return fail("platform file must be a JSON array");

  std::vector<PlatformProfile> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& entry = doc[i];
    std::string where = "platform entry " + std::to_string(i + 1);
    if (!entry.is_object()) return fail(where + " must be an object");
    if (!entry.contains("compiler_id") || !entry["compiler_id"].is_string())
      return fail(where + " is missing a compiler_id");

    PlatformProfile p;
    p.id = entry["compiler_id"].get<std::string>();
    if (p.id.empty()) return fail(where + " has an empty compiler_id");
    for (const auto& existing : out)
      if (existing.id == p.id) return fail("duplicate compiler_id '" + p.id + "'");

    p.display_name = entry.value("display_name", p.id);
    if (entry.contains("quantized")) {
      if (!entry["quantized"].is_boolean())
        return fail("'" + p.id + "': quantized must be a boolean");
      p.quantized = entry["quantized"].get<bool>();
    }

    std::string why;
    std::uint64_t value = 0;
    if (entry.contains("ram")) {
      if (!parse_scaled(entry["ram"], false, value, why))
        return fail("'" + p.id + "': ram " + why);
      p.ram_bytes = value;
    }
    if (entry.contains("flash")) {
      if (!parse_scaled(entry["flash"], false, value, why))
        return fail("'" + p.id + "': flash " + why);
      p.flash_bytes = value;
    }
    if (entry.contains("clock")) {
      if (!parse_scaled(entry["clock"], true, value, why))
        return fail("'" + p.id + "': clock " + why);
      p.clock_hz = value;
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace mdml::platform
