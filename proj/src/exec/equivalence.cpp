#include "qshare/exec/equivalence.hpp"

#include <algorithm>
#include <sstream>

#include "qshare/core/error.hpp"

namespace qshare::exec {

namespace {

std::string row_text(const Row& r) {
  std::string out = "(";
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (i) out += ", ";
    out += r[i].to_sql();
  }
  return out + ")";
}

bool rows_close(const Row& a, const Row& b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!approx_equal(a[i], b[i], tol)) return false;
  }
  return true;
}

int row_compare(const Row& a, const Row& b) {
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    int c = compare(a[i], b[i]);
    if (c) return c;
  }
  return a.size() < b.size() ? -1 : a.size() > b.size() ? 1 : 0;
}

bool multiset_equal(std::vector<Row> a, std::vector<Row> b, double tol, std::string* detail) {
  auto less = [](const Row& x, const Row& y) { return row_compare(x, y) < 0; };
  std::sort(a.begin(), a.end(), less);
  std::sort(b.begin(), b.end(), less);
  for (std::size_t i = 0; i < std::max(a.size(), b.size()); ++i) {
    if (i < a.size() && i < b.size() && rows_close(a[i], b[i], tol)) continue;
    if (detail) {
      *detail = "first differing row " + std::to_string(i) + ": shared " +
                (i < a.size() ? row_text(a[i]) : "<none>") + " vs single " + (i < b.size() ? row_text(b[i]) : "<none>");
    }
    return false;
  }
  return true;
}

struct TieGroup {
  Row key;
  std::vector<Row> rows;
};

std::vector<TieGroup> tie_groups(const std::vector<Row>& rows, const std::vector<ir::OrderKey>& keys) {
  std::vector<TieGroup> out;
  for (const auto& r : rows) {
    Row key;
    for (const auto& k : keys) key.push_back(r[k.output_index]);
    if (out.empty() || row_compare(out.back().key, key) != 0) out.push_back({key, {}});
    out.back().rows.push_back(r);
  }
  return out;
}

}  // namespace

std::string EquivalenceReport::to_text() const {
  std::ostringstream out;
  for (const auto& q : queries) {
    out << (q.equal ? "ok   " : "FAIL ") << q.id << " rows=" << q.shared_rows << "/" << q.single_rows;
    if (!q.detail.empty()) out << " " << q.detail;
    out << "\n";
  }
  out << queries.size() << " queries, " << mismatches << " mismatches, " << shared_statements
      << " shared statements (" << materialized << " materializations), " << single_statements
      << " individual statements\n";
  return out.str();
}

bool results_equivalent(const ir::QuerySpec& spec, const QueryResult& shared, const QueryResult& single,
                        double tolerance, std::string* detail) {
  if (shared.rows.size() != single.rows.size()) {
    if (detail) {
      *detail = "row count " + std::to_string(shared.rows.size()) + " vs " + std::to_string(single.rows.size());
      std::string inner;
      multiset_equal(shared.rows, single.rows, tolerance, &inner);
      if (!inner.empty()) *detail += "; " + inner;
    }
    return false;
  }
  if (spec.ordering.empty()) {
    if (spec.limit) return true;  // any subset of the right size is admissible
    return multiset_equal(shared.rows, single.rows, tolerance, detail);
  }
  auto a = tie_groups(shared.rows, spec.ordering);
  auto b = tie_groups(single.rows, spec.ordering);
  std::size_t offset = 0;
  for (std::size_t g = 0; g < std::min(a.size(), b.size()); ++g) {
    bool last = g + 1 == a.size() || g + 1 == b.size();
    if (!rows_close(a[g].key, b[g].key, tolerance)) {
      if (detail) *detail = "sort key differs at row " + std::to_string(offset) + ": shared " + row_text(a[g].key) +
                            " vs single " + row_text(b[g].key);
      return false;
    }
    if (last && spec.limit) {
      if (a[g].rows.size() != b[g].rows.size()) {
        if (detail) *detail = "last tie group size differs at row " + std::to_string(offset);
        return false;
      }
      break;
    }
    std::string inner;
    if (!multiset_equal(a[g].rows, b[g].rows, tolerance, &inner)) {
      if (detail) *detail = "tie group at row " + std::to_string(offset) + ": " + inner;
      return false;
    }
    offset += a[g].rows.size();
  }
  if (a.size() != b.size() && !spec.limit) {
    if (detail) *detail = "tie group count " + std::to_string(a.size()) + " vs " + std::to_string(b.size());
    return false;
  }
  return true;
}

void corrupt_shared_result(ScriptRun& run) {
  for (auto& [id, r] : run.results) {
    if (r.rows.empty() || r.rows.front().empty()) continue;
    Value& v = r.rows.front().front();
    if (v.is_int()) {
      v = Value(v.as_int() + 1);
    } else if (v.is_double()) {
      v = Value(v.as_double() + 1.0);
    } else if (v.is_string()) {
      v = Value(v.as_string() + "~");
    } else {
      v = Value(std::int64_t{-1});
    }
    return;
  }
  if (!run.results.empty()) {
    auto& r = run.results.begin()->second;
    r.rows.push_back(Row(r.columns.size()));
  }
}

EquivalenceReport equivalence_check(const std::vector<ir::QueryBatch>& batches, BackendAdapter& backend,
                                    const ir::Catalog& catalog, const EquivalenceConfig& config) {
  plan::SharedPlanDag dag;
  if (config.global) {
    dag = plan::build_global_plan(batches, catalog);
  } else {
    for (const auto& b : batches) {
      auto plans = plan::build_batch_plans(b, catalog);
      dag.sinks.insert(dag.sinks.end(), plans.begin(), plans.end());
    }
  }
  auto script = plan::split_dag(dag, config.split, backend.dialect(), catalog, cost::TableStats::from_catalog(catalog));
  auto run = run_script(script, backend);
  if (config.corrupt) corrupt_shared_result(run);

  EquivalenceReport report;
  report.shared_statements = run.statements;
  report.materialized = script.materialize_count();
  for (const auto& b : batches) {
    for (const auto& m : b.members) {
      QueryComparison c;
      c.id = m.original_id;
      auto single = run_single(m.spec, backend);
      ++report.single_statements;
      auto it = run.results.find(m.original_id);
      if (it == run.results.end()) {
        c.equal = false;
        c.detail = "missing from the shared result";
      } else {
        c.shared_rows = it->second.rows.size();
        c.equal = results_equivalent(m.spec, it->second, single, config.tolerance, &c.detail);
      }
      c.single_rows = single.rows.size();
      report.mismatches += !c.equal;
      report.queries.push_back(std::move(c));
    }
  }
  return report;
}

}  // namespace qshare::exec
