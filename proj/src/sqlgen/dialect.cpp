#include "qshare/sqlgen/dialect.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qshare/core/error.hpp"
#include "dialect_data.hpp"

namespace qshare::sqlgen {

std::string fill(const std::string& tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      auto close = tmpl.find('}', i);
      if (close != std::string::npos) {
        auto it = values.find(tmpl.substr(i + 1, close - i - 1));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

DialectProfile DialectProfile::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw PlanError(std::string("malformed dialect profile: ") + e.what());
  }
  DialectProfile d;
  d.name = j.at("name").get<std::string>();
  auto enc = j.value("query_set", std::string("array"));
  if (enc == "array") d.encoding = dq::SetEncoding::Array;
  else if (enc == "bitmask") d.encoding = dq::SetEncoding::Bitmask;
  else throw PlanError("unknown query_set rendering '" + enc + "'");
  auto str = [&](const char* key, std::string& field) { field = j.value(key, field); };
  str("array", d.array);
  str("empty_array", d.empty_array);
  str("remove_element", d.remove_element);
  str("intersect", d.intersect);
  str("nonempty", d.nonempty);
  str("contains", d.contains);
  str("unnest", d.unnest);
  str("unnest_filter", d.unnest_filter);
  str("bit_or", d.bit_or);
  str("divide", d.divide);
  str("row_number", d.row_number);
  d.supports_window = j.value("supports_window", d.supports_window);
  d.reads_materialized = j.value("reads_materialized", d.reads_materialized);
  d.max_query_bytes = j.value("max_query_bytes", d.max_query_bytes);
  return d;
}

DialectProfile DialectProfile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PlanError("cannot open dialect profile '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

const DialectProfile& builtin_dialect(const std::string& name) {
  static const std::map<std::string, DialectProfile> profiles = [] {
    std::map<std::string, DialectProfile> m;
    for (const char* text : kBuiltinDialects) {
      auto d = DialectProfile::from_json_text(text);
      m.emplace(d.name, d);
    }
    return m;
  }();
  auto it = profiles.find(name);
  if (it == profiles.end()) throw PlanError("unknown dialect '" + name + "'");
  return it->second;
}

std::vector<std::string> builtin_dialect_names() {
  return {"presto-like", "standard-like", "reference", "reference-bitmask"};
}

}  // namespace qshare::sqlgen
