#pragma once

#include <json.hpp>

#include <set>
#include <string>
#include <vector>

#include "translab/core.hpp"

namespace translab {

using json = nlohmann::json;

/// A configuration or input file that does not match its schema. `key` is
/// the dotted path of the offending entry.
class SchemaError : public InputError {
 public:
  SchemaError(const std::string& key, const std::string& what)
      : InputError("key '" + key + "': " + what), key(key) {}
  std::string key;
};

inline std::string join_key(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

/// Rejects objects with keys outside `allowed`.
inline void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& path) {
  if (!obj.is_object()) throw SchemaError(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) throw SchemaError(join_key(path, k), "unknown key");
}

inline const json& need(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) throw SchemaError(join_key(path, key), "missing");
  return obj.at(key);
}

inline double as_number(const json& v, const std::string& key) {
  if (!v.is_number()) throw SchemaError(key, "expected a number");
  return v.get<double>();
}

inline long as_integer(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw SchemaError(key, "expected an integer");
  return v.get<long>();
}

inline std::vector<double> as_numbers(const json& v, const std::string& key) {
  if (!v.is_array()) throw SchemaError(key, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], key + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace translab
