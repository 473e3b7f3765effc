#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qshare/ir/catalog.hpp"
#include "qshare/ir/query_spec.hpp"

namespace qshare::testing {

inline std::string data_path(const std::string& name) { return std::string(QSHARE_TEST_DATA) + "/" + name; }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ir::Catalog employees_catalog() { return ir::Catalog::load(data_path("employees_catalog.json")); }

/// Collapses whitespace runs to one space and trims.
inline std::string normalize_ws(const std::string& s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (c == ' ' || c == '\n' || c == '\t' || c == '\r') {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += c;
  }
  return out;
}

/// The four predicates of the shared-scan example: q1 id > 35, q2 id BETWEEN 10 AND 20,
/// q3 id < 51, q4 id BETWEEN 40 AND 50.
inline std::vector<ir::PredicateNF> scan_example_predicates(const ir::Catalog& catalog) {
  std::vector<std::string> where = {"id > 35", "id BETWEEN 10 AND 20", "id < 51", "id BETWEEN 40 AND 50"};
  std::vector<ir::PredicateNF> out;
  for (const auto& w : where) out.push_back(ir::parse_query("SELECT * FROM employees WHERE " + w, catalog).predicate);
  return out;
}

/// Whitespace-insensitive form for comparing SQL text: collapsed whitespace, no blanks next
/// to brackets and commas, no trailing semicolon.
inline std::string normalize_sql(const std::string& s) {
  std::string in = normalize_ws(s);
  while (!in.empty() && (in.back() == ';' || in.back() == ' ')) in.pop_back();
  auto tight = [](char c) { return c == '(' || c == ')' || c == '[' || c == ']' || c == ','; };
  std::string out;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] == ' ' && ((!out.empty() && tight(out.back())) || (i + 1 < in.size() && tight(in[i + 1])))) continue;
    out += in[i];
  }
  return out;
}

}  // namespace qshare::testing
