#pragma once

// Field access helpers that report schema problems with a dotted field path.

#include "json.hpp"
#include "zoomspec/errors.hpp"

#include <cmath>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>

namespace zoomspec::detail {

using json = nlohmann::json;

inline std::string join_path(const std::string& parent, std::string_view key) {
  if (parent.empty()) return std::string(key);
  return parent + "." + std::string(key);
}

inline const json& require_field(const json& j, std::string_view key, const std::string& path) {
  if (!j.is_object()) throw ValidationError("schema error: '" + (path.empty() ? "<root>" : path) + "' must be an object");
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError("schema error: missing required field '" + join_path(path, key) + "'");
  return *it;
}

inline double as_number(const json& v, const std::string& field) {
  if (!v.is_number()) throw ValidationError("schema error: field '" + field + "' must be a number");
  double x = v.get<double>();
  if (!std::isfinite(x)) throw ValidationError("schema error: field '" + field + "' must be finite");
  return x;
}

inline double req_number(const json& j, std::string_view key, const std::string& path) {
  return as_number(require_field(j, key, path), join_path(path, key));
}

inline double opt_number(const json& j, std::string_view key, const std::string& path, double fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  return as_number(*it, join_path(path, key));
}

inline long long as_integer(const json& v, const std::string& field) {
  if (!v.is_number_integer()) {
    // Accept integral floats such as 1024.0 written by other tools.
    if (v.is_number_float()) {
      double x = v.get<double>();
      if (std::isfinite(x) && std::floor(x) == x) return static_cast<long long>(x);
    }
    throw ValidationError("schema error: field '" + field + "' must be an integer");
  }
  return v.get<long long>();
}

inline long long opt_integer(const json& j, std::string_view key, const std::string& path, long long fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  return as_integer(*it, join_path(path, key));
}

inline std::string req_string(const json& j, std::string_view key, const std::string& path) {
  const json& v = require_field(j, key, path);
  if (!v.is_string()) throw ValidationError("schema error: field '" + join_path(path, key) + "' must be a string");
  return v.get<std::string>();
}

inline std::string opt_string(const json& j, std::string_view key, const std::string& path, std::string fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_string()) throw ValidationError("schema error: field '" + join_path(path, key) + "' must be a string");
  return it->get<std::string>();
}

inline bool opt_bool(const json& j, std::string_view key, const std::string& path, bool fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_boolean()) throw ValidationError("schema error: field '" + join_path(path, key) + "' must be a boolean");
  return it->get<bool>();
}

inline void reject_unknown_keys(const json& j, std::initializer_list<std::string_view> known, const std::string& path) {
  if (!j.is_object()) throw ValidationError("schema error: '" + (path.empty() ? "<root>" : path) + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (auto k : known) ok = ok || (k == key);
    if (!ok) throw ValidationError("schema error: unknown field '" + join_path(path, key) + "'");
  }
}

json read_json_file(const std::filesystem::path& path);
void write_json_file(const json& doc, const std::filesystem::path& path);

} // namespace zoomspec::detail
