#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "qshare/dq/relation.hpp"

namespace qshare::sqlgen {

/// Vendor-specific spelling of the annotation operations. Templates use {name} placeholders.
struct DialectProfile {
  std::string name;
  dq::SetEncoding encoding = dq::SetEncoding::Array;
  std::string array = "ARRAY[{items}]";
  std::string empty_array = "ARRAY[]";
  std::string remove_element = "ARRAY_REMOVE({array}, {value})";
  std::string intersect = "ARRAY_INTERSECT({left}, {right})";
  std::string nonempty = "CARDINALITY({set}) > 0";
  std::string contains = "CONTAINS({set}, {id})";
  std::string unnest = "CROSS JOIN UNNEST({set}) AS t(query_id)";
  std::string unnest_filter = "CARDINALITY({set}) > 0";
  std::string bit_or = "|";
  std::string divide = "({left} / {right})";
  std::string row_number = "ROW_NUMBER() OVER ({window})";
  bool supports_window = true;
  bool reads_materialized = true;
  std::size_t max_query_bytes = 262144;

  static DialectProfile from_json_text(const std::string& text);
  static DialectProfile load(const std::string& path);

  bool bitmask() const { return encoding == dq::SetEncoding::Bitmask; }
  std::string annotation_column() const { return "query_set"; }
};

/// Substitutes {key} placeholders. Unknown placeholders are left as they are.
std::string fill(const std::string& tmpl, const std::map<std::string, std::string>& values);

/// Built-in profiles: presto-like, standard-like, reference, reference-bitmask.
const DialectProfile& builtin_dialect(const std::string& name);
std::vector<std::string> builtin_dialect_names();

}  // namespace qshare::sqlgen
