#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "qshare/dq/plan.hpp"
#include "qshare/ir/catalog.hpp"

namespace qshare::cost {

/// 1 - (1 - s)^q. Throws PlanError outside 0 <= s <= 1, q >= 1.
double combined_selectivity(double s, std::uint64_t q);
/// 1 - prod(1 - s_i), the uncorrelated combination of distinct selectivities.
double combined_selectivity(const std::vector<double>& s);

struct ColumnStats {
  double avg_width = 0;
  double total_bytes = 0;
};

struct TableStat {
  std::uint64_t row_count = 0;
  std::map<std::string, ColumnStats> columns;
};

struct TableStats {
  std::map<std::string, TableStat> tables;

  /// total bytes = row count x average width for every column.
  static TableStats from_catalog(const ir::Catalog& catalog);
  static TableStats load(const std::string& path);  // catalog JSON format
  const TableStat& table(const std::string& name) const;  // throws CatalogError
  const ColumnStats& column(const std::string& table, const std::string& column) const;
};

enum class SchemeKind { BytesScanned, ColumnsBilled };

std::string_view to_string(SchemeKind kind);
SchemeKind parse_scheme_kind(std::string_view name);

struct PricingScheme {
  SchemeKind kind = SchemeKind::ColumnsBilled;
  double rate = 5.0 / 1e12;  // currency per byte
  std::uint64_t min_billed_bytes = 0;
  /// Rows sharing one storage block under bytes-scanned pricing. A block is read when any of
  /// its rows qualifies, so the read fraction is 1 - (1 - S)^rows_per_block.
  std::uint64_t rows_per_block = 1;
};

struct StepCost {
  std::string label;
  double billed_bytes = 0;
  double cost = 0;
};

struct CostReport {
  std::vector<StepCost> steps;
  double total_bytes = 0;
  double total_cost = 0;
  std::size_t batch_size = 0;
  double amortized_cost = 0;

  std::string to_text() const;  // '|'-delimited
};

/// Fraction of a table's rows a statement reads, given the per-query selectivities of the
/// queries it serves.
double read_fraction(const std::vector<double>& selectivities, const PricingScheme& scheme);

/// Billed bytes of one statement whose plan is `root`. Scans of base tables bill their
/// referenced columns; temp scans bill est_rows x width of their columns. A custom combined
/// selectivity overrides the uncorrelated formula.
double statement_bytes(const dq::NodePtr& root, const TableStats& stats, const PricingScheme& scheme,
                       const std::vector<double>& selectivities, std::optional<double> combined = std::nullopt);

CostReport estimate_plans(const std::vector<std::pair<std::string, dq::NodePtr>>& statements,
                          const TableStats& stats, const PricingScheme& scheme,
                          const std::vector<double>& selectivities, std::size_t batch_size);

struct ComparisonRow {
  std::size_t batch_size = 0;
  double batched_bytes = 0;
  double batched_cost = 0;
  double qat_bytes = 0;
  double qat_cost = 0;
  double savings_ratio = 0;
};

struct Comparison {
  std::vector<ComparisonRow> rows;
  std::string to_text() const;
};

/// `plan_for(n)` returns the shared plan of a batch of n instances and `single` the plan of one
/// instance. Query-at-a-time cost is n times the single-query cost.
Comparison compare_batch_vs_qat(const std::vector<std::size_t>& batch_sizes,
                                const std::function<dq::NodePtr(std::size_t)>& plan_for, const dq::NodePtr& single,
                                double selectivity, const TableStats& stats, const PricingScheme& scheme);

/// Heuristic selectivity of a predicate, used only for plan-shape decisions.
double estimate_selectivity(const ir::PredicateNF& pred);
/// Estimated output rows and bytes of a plan node.
double estimate_rows(const dq::PlanNode& node, const TableStats& stats);
double estimate_bytes(const dq::PlanNode& node, const TableStats& stats, const ir::Catalog& catalog);
/// Bytes the subtree reads from base tables (full referenced columns).
double recompute_bytes(const dq::PlanNode& node, const TableStats& stats);

}  // namespace qshare::cost
