#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "qshare/dq/plan.hpp"
#include "qshare/sqlgen/dialect.hpp"

namespace qshare::sqlgen {

enum class ScanMode { Linear, Indexed };

std::string_view to_string(ScanMode mode);
ScanMode parse_scan_mode(std::string_view name);

struct RenderedQuery {
  std::string sql;
  std::size_t bytes = 0;
  std::vector<std::string> columns;  // annotation column, when present, is last
  std::vector<LogicalType> types;
  std::string annotation_column;     // "query_set", "query_id" or empty
};

/// A relation the statement being rendered reads from: a CTE or a table.
struct InputRef {
  std::string name;
  dq::Schema schema;
  dq::AnnotationKind kind = dq::AnnotationKind::None;
};

/// Common-table expressions followed by a final SELECT.
struct Fragment {
  std::vector<std::pair<std::string, std::string>> ctes;
  std::string select;

  std::string to_sql() const;
};

using ColumnNamer = std::function<std::string(const ir::ColumnRef&)>;

/// SQL column names of a schema: the bare column name, or table_column when two tables
/// contribute the same name.
std::vector<std::string> column_names(const dq::Schema& schema);
ColumnNamer namer_for(const dq::Schema& schema);

std::string render_predicate(const ir::PredicateNF& pred, const ColumnNamer& name);
std::string render_scalar(const ir::ScalarExpr& expr, const ColumnNamer& name, const DialectProfile& dialect);

/// Shared scan over a base table. Linear mode emits one conditional per query; indexed mode
/// emits the predicate index expression and falls back to linear when nothing is indexable.
Fragment gen_shared_scan_sql(const dq::PlanNode& scan, ScanMode mode, const DialectProfile& dialect,
                             const ir::Catalog& catalog);
/// `name` prefixes the helper CTE (`<name>_helper`).
Fragment gen_shared_join_sql(const dq::PlanNode& join, const InputRef& left, const InputRef& right,
                             const DialectProfile& dialect, const std::string& name = "sjoin");
Fragment gen_shared_select_sql(const dq::PlanNode& select, const InputRef& input, ScanMode mode,
                               const DialectProfile& dialect, const std::string& name = "ssel");
/// Unnest as a standalone step; `keep_all` selects `*` instead of dropping the set column.
Fragment gen_unnest_sql(const InputRef& input, const DialectProfile& dialect, bool keep_all = false);
/// Set inputs are unnested in a CTE named `unnest_name` first.
Fragment gen_shared_group_sql(const dq::PlanNode& group, const InputRef& input, const DialectProfile& dialect,
                              const std::string& unnest_name = "unnested");
Fragment gen_project_sql(const dq::PlanNode& project, const InputRef& input, const DialectProfile& dialect);
Fragment gen_order_limit_sql(const dq::PlanNode& order, const InputRef& input, const DialectProfile& dialect,
                             const std::string& name = "sorder");

/// Throws SizeError when the text exceeds the dialect limit.
RenderedQuery finish(const Fragment& fragment, const dq::Schema& schema, dq::AnnotationKind kind,
                     const DialectProfile& dialect);

/// One statement for a tree-shaped plan, one CTE per operator in topological order.
RenderedQuery render_plan(const dq::NodePtr& root, const DialectProfile& dialect, const ir::Catalog& catalog,
                          ScanMode mode = ScanMode::Linear);

}  // namespace qshare::sqlgen
