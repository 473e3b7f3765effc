#pragma once

#include <string>
#include <vector>

#include "qshare/exec/backend.hpp"

namespace qshare::exec {

struct EquivalenceConfig {
  plan::SplitOptions split;
  /// Unify common cores across batches before splitting.
  bool global = false;
  double tolerance = 1e-9;
  /// Test hook: damages the shared result before comparison.
  bool corrupt = false;
};

struct QueryComparison {
  std::string id;
  bool equal = true;
  std::size_t shared_rows = 0;
  std::size_t single_rows = 0;
  std::string detail;  // first difference
};

struct EquivalenceReport {
  std::vector<QueryComparison> queries;
  std::size_t mismatches = 0;
  std::size_t shared_statements = 0;
  std::size_t single_statements = 0;
  std::size_t materialized = 0;

  bool ok() const { return mismatches == 0; }
  std::string to_text() const;
};

/// Compares two results of `spec`: as multisets, or, under ORDER BY, group by group of rows
/// with equal sort keys. Under LIMIT the last group is compared by size only.
bool results_equivalent(const ir::QuerySpec& spec, const QueryResult& shared, const QueryResult& single,
                        double tolerance, std::string* detail = nullptr);

/// Perturbs one value (or adds a row when everything is empty).
void corrupt_shared_result(ScriptRun& run);

/// Runs the shared script and every member individually on `backend` and compares them.
/// Backend failures propagate as BackendError with the statement attached.
EquivalenceReport equivalence_check(const std::vector<ir::QueryBatch>& batches, BackendAdapter& backend,
                                    const ir::Catalog& catalog, const EquivalenceConfig& config = {});

}  // namespace qshare::exec
