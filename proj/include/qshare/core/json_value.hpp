#pragma once

#include <json.hpp>

#include "qshare/core/error.hpp"
#include "qshare/core/value.hpp"

namespace qshare {

inline Value value_from_json(const nlohmann::json& j) {
  if (j.is_null()) return Value();
  if (j.is_boolean()) return Value(j.get<bool>());
  if (j.is_number_integer()) return Value(j.get<std::int64_t>());
  if (j.is_number()) return Value(j.get<double>());
  if (j.is_string()) return Value(j.get<std::string>());
  throw PlanError("unsupported binding value " + j.dump());
}

inline nlohmann::json value_to_json(const Value& v) {
  if (v.is_null()) return nullptr;
  if (v.is_bool()) return v.as_bool();
  if (v.is_int()) return v.as_int();
  if (v.is_double()) return v.as_double();
  if (v.is_string()) return v.as_string();
  return v.as_array();
}

}  // namespace qshare
