#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qshare/core/value.hpp"

namespace qshare::ir {

struct ColumnSchema {
  std::string name;
  LogicalType type = LogicalType::Int;
  double avg_width = 8.0;  // bytes
};

struct TableSchema {
  std::string name;
  std::vector<ColumnSchema> columns;
  std::uint64_t row_count = 0;

  const ColumnSchema* find(const std::string& column) const;
  std::optional<std::size_t> index_of(const std::string& column) const;
};

/// Declarative schema catalog. Names are case-insensitive and stored lower-case.
class Catalog {
 public:
  void add(TableSchema table);

  const TableSchema* find(const std::string& table) const;
  const TableSchema& table(const std::string& table) const;  // throws CatalogError
  const std::vector<TableSchema>& tables() const { return tables_; }

  /// Loads the JSON schema file:
  /// {"tables":[{"name":..,"row_count":..,"columns":[{"name":..,"type":..,"avg_width":..}]}]}
  static Catalog from_json_text(const std::string& text);
  static Catalog load(const std::string& path);
  std::string to_json_text() const;

 private:
  std::vector<TableSchema> tables_;
};

}  // namespace qshare::ir
