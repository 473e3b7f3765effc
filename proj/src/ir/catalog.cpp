#include "qshare/ir/catalog.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qshare/core/error.hpp"

namespace qshare::ir {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

const ColumnSchema* TableSchema::find(const std::string& column) const {
  for (const auto& c : columns) {
    if (c.name == column) return &c;
  }
  return nullptr;
}

std::optional<std::size_t> TableSchema::index_of(const std::string& column) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == column) return i;
  }
  return std::nullopt;
}

void Catalog::add(TableSchema table) {
  table.name = lower(table.name);
  for (auto& c : table.columns) {
    c.name = lower(c.name);
    if (c.name == "query_set" || c.name == "query_id") {
      throw CatalogError("column name '" + c.name + "' is reserved for annotations");
    }
  }
  if (find(table.name)) throw CatalogError("duplicate table '" + table.name + "'");
  tables_.push_back(std::move(table));
}

const TableSchema* Catalog::find(const std::string& table) const {
  auto key = lower(table);
  for (const auto& t : tables_) {
    if (t.name == key) return &t;
  }
  return nullptr;
}

const TableSchema& Catalog::table(const std::string& table) const {
  if (const auto* t = find(table)) return *t;
  throw CatalogError("unknown table '" + table + "'");
}

Catalog Catalog::from_json_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CatalogError(std::string("malformed catalog: ") + e.what());
  }
  Catalog catalog;
  for (const auto& jt : doc.at("tables")) {
    TableSchema t;
    t.name = jt.at("name").get<std::string>();
    t.row_count = jt.value("row_count", std::uint64_t{0});
    for (const auto& jc : jt.at("columns")) {
      ColumnSchema c;
      c.name = jc.at("name").get<std::string>();
      auto type_name = lower(jc.at("type").get<std::string>());
      auto type = parse_logical_type(type_name);
      if (!type) throw CatalogError("unknown column type '" + type_name + "'");
      c.type = *type;
      c.avg_width = jc.value("avg_width", 8.0);
      t.columns.push_back(std::move(c));
    }
    catalog.add(std::move(t));
  }
  return catalog;
}

Catalog Catalog::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CatalogError("cannot open catalog file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string Catalog::to_json_text() const {
  nlohmann::json doc;
  doc["tables"] = nlohmann::json::array();
  for (const auto& t : tables_) {
    nlohmann::json jt;
    jt["name"] = t.name;
    jt["row_count"] = t.row_count;
    jt["columns"] = nlohmann::json::array();
    for (const auto& c : t.columns) {
      jt["columns"].push_back(
          {{"name", c.name}, {"type", std::string(to_string(c.type))}, {"avg_width", c.avg_width}});
    }
    doc["tables"].push_back(std::move(jt));
  }
  return doc.dump(2) + "\n";
}

}  // namespace qshare::ir
