#include "qshare/cost/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "qshare/core/error.hpp"

namespace qshare::cost {

double combined_selectivity(double s, std::uint64_t q) {
  if (!(s >= 0.0 && s <= 1.0)) throw PlanError("selectivity must lie in [0, 1]");
  if (q < 1) throw PlanError("query count must be at least 1");
  return 1.0 - std::pow(1.0 - s, static_cast<double>(q));
}

double combined_selectivity(const std::vector<double>& s) {
  if (s.empty()) throw PlanError("query count must be at least 1");
  double none = 1.0;
  for (double x : s) {
    if (!(x >= 0.0 && x <= 1.0)) throw PlanError("selectivity must lie in [0, 1]");
    none *= 1.0 - x;
  }
  return 1.0 - none;
}

TableStats TableStats::from_catalog(const ir::Catalog& catalog) {
  TableStats out;
  for (const auto& t : catalog.tables()) {
    TableStat ts;
    ts.row_count = t.row_count;
    for (const auto& c : t.columns) {
      ts.columns[c.name] = {c.avg_width, c.avg_width * static_cast<double>(t.row_count)};
    }
    out.tables[t.name] = std::move(ts);
  }
  return out;
}

TableStats TableStats::load(const std::string& path) { return from_catalog(ir::Catalog::load(path)); }

const TableStat& TableStats::table(const std::string& name) const {
  auto it = tables.find(name);
  if (it == tables.end()) throw CatalogError("no statistics for table '" + name + "'");
  return it->second;
}

const ColumnStats& TableStats::column(const std::string& t, const std::string& c) const {
  const auto& ts = table(t);
  auto it = ts.columns.find(c);
  if (it == ts.columns.end()) throw CatalogError("no statistics for column '" + t + "." + c + "'");
  return it->second;
}

std::string_view to_string(SchemeKind kind) {
  return kind == SchemeKind::BytesScanned ? "bytes-scanned" : "columns-billed";
}

SchemeKind parse_scheme_kind(std::string_view name) {
  if (name == "bytes-scanned") return SchemeKind::BytesScanned;
  if (name == "columns-billed") return SchemeKind::ColumnsBilled;
  throw PlanError("unknown pricing scheme '" + std::string(name) + "'");
}

std::string CostReport::to_text() const {
  std::ostringstream out;
  out << "step|billed_bytes|cost\n";
  for (const auto& s : steps) out << s.label << '|' << format_double(s.billed_bytes) << '|' << format_double(s.cost) << '\n';
  out << "total|" << format_double(total_bytes) << '|' << format_double(total_cost) << '\n';
  out << "amortized|" << batch_size << '|' << format_double(amortized_cost) << '\n';
  return out.str();
}

double read_fraction(const std::vector<double>& selectivities, const PricingScheme& scheme) {
  double s = combined_selectivity(selectivities);
  if (scheme.rows_per_block <= 1) return s;
  return combined_selectivity(s, scheme.rows_per_block);
}

namespace {

void predicate_columns(const ir::PredicateNF& pred, std::set<std::string>& out) {
  for (const auto& d : pred.disjuncts) {
    for (const auto& a : d.atoms) out.insert(a.column.column);
  }
}

struct TableUse {
  std::set<std::string> columns;
  bool filtered = false;
};

void collect(const dq::PlanNode& n, std::map<std::string, TableUse>& tables, double& temp_bytes,
             std::set<const dq::PlanNode*>& seen) {
  if (!seen.insert(&n).second) return;
  if (n.kind == dq::OpKind::Scan) {
    auto& use = tables[n.table];
    use.columns.insert(n.columns.begin(), n.columns.end());
    if (n.annotate) {
      for (const auto& p : n.preds) {
        predicate_columns(p, use.columns);
        use.filtered = use.filtered || !p.is_true();
      }
      if (std::any_of(n.preds.begin(), n.preds.end(), [](const auto& p) { return p.is_true(); })) {
        use.filtered = false;
      }
    } else {
      predicate_columns(n.filter, use.columns);
      use.filtered = !n.filter.is_true();
    }
  } else if (n.kind == dq::OpKind::TempScan) {
    temp_bytes += n.est_bytes;
  }
  for (const auto& in : n.inputs) collect(*in, tables, temp_bytes, seen);
}

double atom_selectivity(const ir::Atom& a) {
  switch (a.op) {
    case ir::CompareOp::Eq: return 0.1;
    case ir::CompareOp::Ne: return 0.9;
    case ir::CompareOp::In: return std::min(1.0, 0.1 * static_cast<double>(a.operands.size()));
    case ir::CompareOp::Between: return 0.25;
    case ir::CompareOp::Like: return 0.1;
    default: return 1.0 / 3.0;
  }
}

double output_width(const dq::Schema& schema, const TableStats& stats) {
  double w = 0;
  for (const auto& c : schema.columns) {
    auto t = stats.tables.find(c.table);
    if (t != stats.tables.end()) {
      auto col = t->second.columns.find(c.column);
      if (col != t->second.columns.end()) {
        w += col->second.avg_width;
        continue;
      }
    }
    w += 8;
  }
  return w;
}

}  // namespace

double statement_bytes(const dq::NodePtr& root, const TableStats& stats, const PricingScheme& scheme,
                       const std::vector<double>& selectivities, std::optional<double> combined) {
  std::map<std::string, TableUse> tables;
  double temp_bytes = 0;
  std::set<const dq::PlanNode*> seen;
  collect(*root, tables, temp_bytes, seen);
  double billed = temp_bytes;
  for (const auto& [name, use] : tables) {
    double full = 0;
    for (const auto& c : use.columns) full += stats.column(name, c).total_bytes;
    if (scheme.kind == SchemeKind::ColumnsBilled || !use.filtered) {
      billed += full;
      continue;
    }
    double fraction = 1.0;
    if (combined) {
      fraction = scheme.rows_per_block <= 1 ? *combined : combined_selectivity(*combined, scheme.rows_per_block);
    } else if (!selectivities.empty()) {
      fraction = read_fraction(selectivities, scheme);
    }
    billed += full * std::min(1.0, fraction);
  }
  return std::max(billed, static_cast<double>(scheme.min_billed_bytes));
}

CostReport estimate_plans(const std::vector<std::pair<std::string, dq::NodePtr>>& statements,
                          const TableStats& stats, const PricingScheme& scheme,
                          const std::vector<double>& selectivities, std::size_t batch_size) {
  if (scheme.rate <= 0) throw PlanError("pricing rate must be positive");
  CostReport r;
  for (const auto& [label, root] : statements) {
    StepCost s;
    s.label = label;
    s.billed_bytes = statement_bytes(root, stats, scheme, selectivities);
    s.cost = s.billed_bytes * scheme.rate;
    r.total_bytes += s.billed_bytes;
    r.total_cost += s.cost;
    r.steps.push_back(std::move(s));
  }
  r.batch_size = batch_size;
  r.amortized_cost = batch_size ? r.total_cost / static_cast<double>(batch_size) : 0.0;
  return r;
}

std::string Comparison::to_text() const {
  std::ostringstream out;
  out << "batch_size|batched_bytes|batched_cost|qat_bytes|qat_cost|savings_ratio\n";
  for (const auto& r : rows) {
    out << r.batch_size << '|' << format_double(r.batched_bytes) << '|' << format_double(r.batched_cost) << '|'
        << format_double(r.qat_bytes) << '|' << format_double(r.qat_cost) << '|' << format_double(r.savings_ratio)
        << '\n';
  }
  return out.str();
}

Comparison compare_batch_vs_qat(const std::vector<std::size_t>& batch_sizes,
                                const std::function<dq::NodePtr(std::size_t)>& plan_for, const dq::NodePtr& single,
                                double selectivity, const TableStats& stats, const PricingScheme& scheme) {
  Comparison out;
  double one = statement_bytes(single, stats, scheme, {selectivity});
  for (auto n : batch_sizes) {
    ComparisonRow r;
    r.batch_size = n;
    r.batched_bytes = statement_bytes(plan_for(n), stats, scheme, std::vector<double>(n, selectivity));
    r.batched_cost = r.batched_bytes * scheme.rate;
    r.qat_bytes = one * static_cast<double>(n);
    r.qat_cost = r.qat_bytes * scheme.rate;
    r.savings_ratio = r.batched_bytes > 0 ? r.qat_bytes / r.batched_bytes : 1.0;
    out.rows.push_back(r);
  }
  return out;
}

double estimate_selectivity(const ir::PredicateNF& pred) {
  if (pred.is_true()) return 1.0;
  std::vector<double> parts;
  for (const auto& d : pred.disjuncts) {
    double s = 1.0;
    for (const auto& a : d.atoms) s *= atom_selectivity(a);
    parts.push_back(s);
  }
  if (parts.empty()) return 0.0;
  return combined_selectivity(parts);
}

double estimate_rows(const dq::PlanNode& n, const TableStats& stats) {
  switch (n.kind) {
    case dq::OpKind::Scan: {
      double rows = static_cast<double>(stats.table(n.table).row_count);
      if (!n.annotate) return rows * estimate_selectivity(n.filter);
      std::vector<double> s;
      for (const auto& p : n.preds) s.push_back(estimate_selectivity(p));
      return s.empty() ? rows : rows * combined_selectivity(s);
    }
    case dq::OpKind::TempScan: return n.est_rows;
    case dq::OpKind::Select: {
      std::vector<double> s;
      for (const auto& p : n.preds) s.push_back(estimate_selectivity(p));
      double in = estimate_rows(*n.inputs[0], stats);
      return s.empty() ? in : in * combined_selectivity(s);
    }
    case dq::OpKind::Join:
      return std::max(estimate_rows(*n.inputs[0], stats), estimate_rows(*n.inputs[1], stats));
    default: return estimate_rows(*n.inputs[0], stats);
  }
}

double estimate_bytes(const dq::PlanNode& n, const TableStats& stats, const ir::Catalog& catalog) {
  return estimate_rows(n, stats) * output_width(dq::output_schema(n, catalog), stats);
}

double recompute_bytes(const dq::PlanNode& n, const TableStats& stats) {
  std::map<std::string, TableUse> tables;
  double temp_bytes = 0;
  std::set<const dq::PlanNode*> seen;
  collect(n, tables, temp_bytes, seen);
  double out = temp_bytes;
  for (const auto& [name, use] : tables) {
    for (const auto& c : use.columns) out += stats.column(name, c).total_bytes;
  }
  return out;
}

}  // namespace qshare::cost
