#pragma once

// Minimal structural validator for the JSON-schema subset used by the
// shipped report schemas: type / properties / required / items, with union
// types as arrays of type names. Test-only helper.

#include <string>
#include <vector>

#include <json.hpp>

namespace schema_check {

using nlohmann::json;

inline bool typeMatches(const json& value, const std::string& type) {
  if (type == "object") return value.is_object();
  if (type == "array") return value.is_array();
  if (type == "string") return value.is_string();
  if (type == "boolean") return value.is_boolean();
  if (type == "integer") return value.is_number_integer() || value.is_number_unsigned();
  if (type == "number") return value.is_number();
  if (type == "null") return value.is_null();
  return false;
}

inline void validate(const json& value, const json& schema, const std::string& where,
                     std::vector<std::string>& errors) {
  if (schema.contains("type")) {
    const json& t = schema["type"];
    bool ok = false;
    if (t.is_string()) {
      ok = typeMatches(value, t.get<std::string>());
    } else if (t.is_array()) {
      for (const auto& option : t) ok = ok || typeMatches(value, option.get<std::string>());
    }
    if (!ok) {
      errors.push_back(where + ": type mismatch");
      return;
    }
  }
  if (value.is_object()) {
    if (schema.contains("required"))
      for (const auto& key : schema["required"])
        if (!value.contains(key.get<std::string>()))
          errors.push_back(where + ": missing required key " + key.get<std::string>());
    if (schema.contains("properties"))
      for (auto it = schema["properties"].begin(); it != schema["properties"].end(); ++it)
        if (value.contains(it.key()))
          validate(value[it.key()], it.value(), where + "." + it.key(), errors);
  }
  if (value.is_array() && schema.contains("items"))
    for (std::size_t i = 0; i < value.size(); ++i)
      validate(value[i], schema["items"], where + "[" + std::to_string(i) + "]", errors);
}

inline std::vector<std::string> validate(const json& value, const json& schema) {
  std::vector<std::string> errors;
  validate(value, schema, "$", errors);
  return errors;
}

}  // namespace schema_check
