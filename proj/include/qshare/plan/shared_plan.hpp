#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qshare/cost/cost_model.hpp"
#include "qshare/dq/plan.hpp"
#include "qshare/ir/batch.hpp"
#include "qshare/sqlgen/render.hpp"

namespace qshare::plan {

/// Shared plan for queries of one shape. Member i carries annotation id i + 1.
struct SharedPlan {
  dq::NodePtr root;
  std::uint64_t batch_id = 0;
  std::vector<ir::QueryId> ids;  // batch-level ids of the members
  std::vector<std::string> original_ids;
  std::vector<ir::QuerySpec> specs;
  std::vector<std::string> output_names;

  std::size_t size() const { return specs.size(); }
};

/// Shared plan of a batch whose members all have the same shape. Throws PlanError otherwise.
SharedPlan build_shared_plan(const ir::QueryBatch& batch, const ir::Catalog& catalog);

/// One shared plan per distinct shape in the batch, in first-appearance order.
std::vector<SharedPlan> build_batch_plans(const ir::QueryBatch& batch, const ir::Catalog& catalog);

/// Per-sink trees whose common nodes are shared by pointer.
struct SharedPlanDag {
  std::vector<SharedPlan> sinks;

  /// Number of parent edges per node, over all sinks.
  std::map<const dq::PlanNode*, std::size_t> consumers() const;
  std::size_t shared_node_count() const;
};

/// Plans of all batches, with scan/join cores over the same relations and join edges unified
/// into one unannotated subtree read by every consumer.
SharedPlanDag build_global_plan(const std::vector<ir::QueryBatch>& batches, const ir::Catalog& catalog);

enum class SplitPolicy { Heuristic, AlwaysDuplicate, AlwaysMaterialize };

std::string_view to_string(SplitPolicy policy);
SplitPolicy parse_split_policy(std::string_view name);

struct SplitOptions {
  SplitPolicy policy = SplitPolicy::Heuristic;
  /// Materialize when output bytes x (consumers - 1) > factor x recompute bytes.
  double factor = 1.0;
  sqlgen::ScanMode mode = sqlgen::ScanMode::Linear;
};

struct ScriptStep {
  enum class Kind { Materialize, Run };

  std::size_t id = 0;
  Kind kind = Kind::Run;
  dq::NodePtr plan;
  std::string sql;
  std::vector<std::string> columns;
  std::vector<LogicalType> types;
  std::string temp_name;  // Materialize only
  std::size_t sink = 0;   // Run only
  std::vector<std::size_t> depends_on;
};

/// Ordered statements: materializations first, then one run per sink.
struct ExecutionScript {
  std::string dialect;
  sqlgen::ScanMode mode = sqlgen::ScanMode::Linear;
  std::vector<ScriptStep> steps;
  std::vector<SharedPlan> sinks;  // roots are the rewritten trees

  std::size_t materialize_count() const;
  std::size_t run_count() const;
  std::string to_json() const;
};

/// Turns the DAG into trees by duplicating or materializing every node with several consumers.
/// Throws PlanError when materialization is chosen on a dialect that cannot read it back.
ExecutionScript split_dag(const SharedPlanDag& dag, const SplitOptions& options,
                          const sqlgen::DialectProfile& dialect, const ir::Catalog& catalog,
                          const cost::TableStats& stats);

/// Single-statement script for one batch: one run per shape, no sharing across shapes.
ExecutionScript plan_batch(const ir::QueryBatch& batch, const sqlgen::DialectProfile& dialect,
                           const ir::Catalog& catalog, sqlgen::ScanMode mode = sqlgen::ScanMode::Linear);

/// Output column names for a query: output names made unique and safe as identifiers.
std::vector<std::string> output_names(const ir::QuerySpec& spec);

/// Part of `pred` over columns of `table`: implied by `pred`, exact for single conjunctions.
ir::PredicateNF push_down(const ir::PredicateNF& pred, const std::string& table);

}  // namespace qshare::plan
