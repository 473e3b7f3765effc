#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qshare/dq/relation.hpp"
#include "qshare/ir/batch.hpp"
#include "qshare/ir/catalog.hpp"

namespace qshare::workload {

enum class TemplateKind { Q1, Q3, Q6, Q10, Search };

std::string_view to_string(TemplateKind kind);
TemplateKind parse_template(std::string_view name);  // throws PlanError
const std::vector<TemplateKind>& all_templates();

struct WorkloadSpec {
  /// LINEITEM has round(6e6 x scale_factor) rows, ORDERS a quarter of that, CUSTOMER a tenth of ORDERS.
  double scale_factor = 0.001;
  std::vector<TemplateKind> templates = all_templates();
  std::size_t instances = 32;
  std::uint64_t seed = 1;
};

struct TableSizes {
  std::uint64_t lineitem = 0;
  std::uint64_t orders = 0;
  std::uint64_t customer = 0;
};

TableSizes table_sizes(const WorkloadSpec& spec);

/// Schema of the generated tables with row counts for the spec's scale.
ir::Catalog workload_catalog(const WorkloadSpec& spec);

/// Deterministic tables. Dates are yyyymmdd integers; l_dense runs 1..n.
dq::Database generate_database(const WorkloadSpec& spec, const ir::Catalog& catalog);

/// Writes <dir>/<table>.tbl and <dir>/catalog.json.
void generate_data(const WorkloadSpec& spec, const std::string& dir);

/// Parameterized statement of a template.
std::string template_sql(TemplateKind kind);

/// `instances` records per template, ids like "q6_007", all bindings drawn from the seed.
std::vector<ir::QueryRecord> generate_queries(const WorkloadSpec& spec);

/// Selection-only scans on l_dense, each matching ceil(s x rows) rows.
std::vector<ir::QueryRecord> dense_scan_queries(std::size_t count, double selectivity, std::uint64_t rows,
                                                std::uint64_t seed);

/// Inclusive l_dense range [lo, hi] of ceil(s x rows) values starting at `lo`.
std::pair<std::uint64_t, std::uint64_t> dense_range(double selectivity, std::uint64_t rows, std::uint64_t lo);

}  // namespace qshare::workload
