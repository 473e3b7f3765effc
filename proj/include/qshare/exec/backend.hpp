#pragma once

#include <atomic>
#include <map>
#include <string>
#include <vector>

#include "qshare/exec/engine.hpp"
#include "qshare/ir/batch.hpp"
#include "qshare/plan/shared_plan.hpp"
#include "qshare/sqlgen/dialect.hpp"

namespace qshare::exec {

/// What the rewriter needs from a database.
class BackendAdapter {
 public:
  virtual ~BackendAdapter() = default;

  virtual const sqlgen::DialectProfile& dialect() const = 0;
  /// Throws BackendError carrying the statement.
  virtual ResultTable execute(const std::string& sql) = 0;
  virtual void create_temp(const std::string& name, const ResultTable& table) = 0;
  virtual void drop_temp(const std::string& name) = 0;
  /// True when execute may be called from several threads at once.
  virtual bool concurrent() const { return false; }
};

/// Adapter over the in-process reference engine.
class ReferenceBackend : public BackendAdapter {
 public:
  explicit ReferenceBackend(const dq::Database& db, sqlgen::DialectProfile dialect = sqlgen::builtin_dialect("reference"));

  const sqlgen::DialectProfile& dialect() const override { return dialect_; }
  ResultTable execute(const std::string& sql) override;
  void create_temp(const std::string& name, const ResultTable& table) override;
  void drop_temp(const std::string& name) override;
  bool concurrent() const override { return true; }

  std::size_t statements_executed() const { return executed_.load(); }
  const ReferenceEngine& engine() const { return engine_; }

 private:
  sqlgen::DialectProfile dialect_;
  ReferenceEngine engine_;
  std::atomic<std::size_t> executed_{0};
};

/// Splits a shared result by its annotation column. Every id in 1..batch_size gets an entry;
/// the annotation column is removed from each table.
std::map<std::uint32_t, ResultTable> demux_results(const ResultTable& shared, std::size_t batch_size);

/// Final result of one query, named by its output columns.
struct QueryResult {
  std::vector<std::string> columns;
  std::vector<Row> rows;
};

struct ScriptRun {
  std::map<std::string, QueryResult> results;  // by original query id
  std::size_t statements = 0;
  std::vector<std::string> temp_tables;  // created and dropped again
};

/// Runs materializations, then every sink; demultiplexes and drops temp tables afterwards.
/// Global aggregates with no rows receive their default row.
ScriptRun run_script(const plan::ExecutionScript& script, BackendAdapter& backend);

/// Original SQL of one query, as executed query-at-a-time.
QueryResult run_single(const ir::QuerySpec& spec, BackendAdapter& backend);

}  // namespace qshare::exec
