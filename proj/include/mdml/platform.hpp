#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mdml/ml/mlp.hpp"

namespace mdml::platform {

inline constexpr std::uint64_t kProgramReserve = 128 * 1024;

struct PlatformProfile {
  std::string id;  // value of the @compiler annotation
  std::string display_name;
  std::optional<std::uint64_t> ram_bytes;
  std::optional<std::uint64_t> flash_bytes;
  std::optional<std::uint64_t> clock_hz;
  bool quantized = false;  // target deploys the int8 model
  std::uint64_t program_reserve_bytes = kProgramReserve;

  bool operator==(const PlatformProfile&) const = default;
};

// The four compiler targets that ship with the toolchain.
const std::vector<PlatformProfile>& builtin_registry();

const PlatformProfile* find_platform(const std::vector<PlatformProfile>& registry,
                                     const std::string& id);
std::vector<std::string> platform_ids(const std::vector<PlatformProfile>& registry);

struct SizeReport {
  std::uint64_t param_count = 0;
  std::uint64_t float_bytes = 0;      // float32 container
  std::uint64_t quantized_bytes = 0;  // int8 container
  std::uint64_t carray_bytes = 0;     // quantized container rendered as a C array
  std::uint64_t arena_bytes = 0;      // widest pair of adjacent activation buffers
  double expansion_ratio = 0.0;       // carray_bytes / quantized_bytes
};

// nullopt for invalid architectures or sizes that overflow 64 bits.
std::optional<SizeReport> estimate_sizes(const ml::MlpArchitecture& arch);

// PaperCompat charges the C-array source against flash, nothing else.
// Strict charges the deployed container plus a program reserve against
// flash and the container plus the activation arena against RAM.
enum class DeployPolicy { PaperCompat, Strict };

struct DeployDecision {
  bool accepted = true;
  std::string binding_constraint;  // "flash", "ram" or "" when unconstrained
  std::uint64_t margin_bytes = 0;  // headroom when accepted, overflow when not
};

DeployDecision check_deployability(const SizeReport& sizes, const PlatformProfile& profile,
                                   DeployPolicy policy);

// User-defined platforms: a JSON array of objects with keys compiler_id,
// ram, flash, clock and quantized. Sizes take KB/MB/KiB/MiB suffixes,
// clocks take Hz/kHz/MHz/GHz; bare numbers are bytes and Hz.
std::optional<std::vector<PlatformProfile>> load_platforms_json(const std::string& text,
                                                                std::string* error = nullptr);

}  // namespace mdml::platform
