#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mdml::conv {

// xxd -i style C source: `unsigned char <symbol>[] = { ... };` with twelve
// bytes per line, followed by `unsigned int <symbol>_len = N;`.
std::string emit_carray(const std::vector<std::uint8_t>& data, const std::string& symbol);

// Byte size of emit_carray output, closed form.
std::uint64_t carray_size_bytes(std::uint64_t payload_bytes, const std::string& symbol);

// Inverse of emit_carray; tolerant of whitespace but strict about structure.
// Errors carry a 1-based line number.
std::optional<std::vector<std::uint8_t>> parse_carray(const std::string& text,
                                                      std::string* symbol = nullptr,
                                                      std::string* error = nullptr);

}  // namespace mdml::conv
