#pragma once

#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "qshare/core/sql_ast.hpp"
#include "qshare/dq/relation.hpp"

namespace qshare::exec {

/// Result of one statement. The annotation column, when marked, is the last column.
struct ResultTable {
  std::vector<std::string> columns;
  std::vector<LogicalType> types;
  std::vector<Row> rows;
  std::string annotation_column;

  std::optional<std::size_t> column_index(const std::string& name) const;
};

/// In-process executor for the statements the reference dialects render: CTEs, inner and
/// cross joins, UNNEST, grouping, ROW_NUMBER windows, ORDER BY and LIMIT.
class ReferenceEngine {
 public:
  ReferenceEngine() = default;
  explicit ReferenceEngine(const dq::Database& db) { add_database(db); }
  ReferenceEngine(const ReferenceEngine& other);
  ReferenceEngine& operator=(const ReferenceEngine&) = delete;

  void add_database(const dq::Database& db);
  /// Registers or replaces a table.
  void add_table(const std::string& name, ResultTable table);
  void drop_table(const std::string& name);
  bool has_table(const std::string& name) const;
  std::vector<std::string> table_names() const;

  /// Throws SyntaxError, UnsupportedError or CatalogError.
  ResultTable execute(const std::string& sql) const;
  ResultTable execute(const sql::SelectStmt& stmt) const;

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, ResultTable> tables_;
};

/// Column types inferred from the first non-NULL value of each column (Int when all NULL).
std::vector<LogicalType> infer_types(const std::vector<Row>& rows, std::size_t width);

}  // namespace qshare::exec
