#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

namespace tpayield {

/// Shortest decimal string that round-trips the exact double value.
inline std::string format_double(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  return std::string(buf, ptr);
}

inline bool parse_double(std::string_view text, double& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

std::uint64_t fnv1a64(std::string_view bytes);

/// Serializes a JSON document with keys in sorted order (nlohmann's default
/// object ordering) and every number printed with 17 significant digits, so
/// identical documents always produce identical bytes and floats round-trip
/// exactly.
std::string dump_json_17(const nlohmann::json& doc, int indent = 2);

}  // namespace tpayield
