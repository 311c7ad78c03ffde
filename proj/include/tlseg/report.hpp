#pragma once

// Rendering of structured run reports as JSON or as flat key=value text.
// Both renderings print numbers in shortest round-trip form.

#include <charconv>
#include <string>

#include <json.hpp>

namespace tlseg {

using Json = nlohmann::ordered_json;

enum class ReportFormat { Text, Json };

namespace detail {

inline std::string shortest(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline void flatten(const Json& j, const std::string& prefix, std::string& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
  } else if (j.is_array()) {
    if (j.empty()) out += prefix + "=\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      flatten(j[i], prefix + "[" + std::to_string(i) + "]", out);
    }
  } else {
    std::string value;
    if (j.is_null()) {
      value = "null";
    } else if (j.is_number_float()) {
      value = shortest(j.get<double>());
    } else if (j.is_string()) {
      value = j.get<std::string>();
    } else {
      value = j.dump();
    }
    out += prefix + "=" + value + "\n";
  }
}

}  // namespace detail

inline std::string render_report(const Json& report, ReportFormat format) {
  if (format == ReportFormat::Json) return report.dump(2) + "\n";
  std::string out;
  detail::flatten(report, "", out);
  return out;
}

}  // namespace tlseg
