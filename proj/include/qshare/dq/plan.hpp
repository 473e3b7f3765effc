#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qshare/dq/operators.hpp"

namespace qshare::dq {

enum class OpKind { Scan, TempScan, Select, Join, Unnest, Group, Project, OrderLimit };

std::string_view to_string(OpKind kind);

struct PlanNode;
using NodePtr = std::shared_ptr<PlanNode>;

/// One shared operator. Only the fields of its kind are meaningful.
struct PlanNode {
  OpKind kind = OpKind::Scan;
  std::vector<NodePtr> inputs;

  // Scan: annotated scans evaluate `preds`; filter-only scans keep rows matching `filter`.
  std::string table;
  std::vector<std::string> columns;
  bool annotate = false;
  ir::PredicateNF filter = ir::PredicateNF::always_true();

  // Scan and Select
  QueryPredicates preds;

  // Join
  JoinKeys keys;

  // Group
  std::vector<ColumnRef> group_keys;
  std::vector<NamedAggregate> aggs;

  // Project
  std::vector<ProjectItem> items;

  // OrderLimit
  std::vector<SortKey> sort;
  std::vector<std::optional<std::uint64_t>> limits;

  // TempScan
  std::string temp_name;
  Schema temp_schema;

  std::size_t batch_size = 0;
  double est_rows = 0;
  double est_bytes = 0;
};

NodePtr make_scan(const ir::TableSchema& table, std::vector<std::string> columns, QueryPredicates preds);
NodePtr make_filter_scan(const ir::TableSchema& table, std::vector<std::string> columns,
                         ir::PredicateNF filter);
NodePtr make_select(NodePtr input, QueryPredicates preds);
NodePtr make_join(NodePtr left, NodePtr right, JoinKeys keys);
NodePtr make_unnest(NodePtr input);
NodePtr make_group(NodePtr input, std::vector<ColumnRef> keys, std::vector<NamedAggregate> aggs);
NodePtr make_project(NodePtr input, std::vector<ProjectItem> items);
NodePtr make_order_limit(NodePtr input, std::vector<SortKey> keys,
                         std::vector<std::optional<std::uint64_t>> limits);
NodePtr make_temp_scan(std::string name, Schema schema);

/// Output schema and annotation kind of a node, without evaluating it.
Schema output_schema(const PlanNode& node, const ir::Catalog& catalog);
AnnotationKind output_kind(const PlanNode& node);

/// Throws PlanError when annotation kinds along the plan violate the operator typing rules.
void check_plan(const PlanNode& node);

/// Reference evaluation of a plan. Shared subplans are evaluated once.
class Evaluator {
 public:
  Evaluator(const Database& db, SetEncoding encoding = SetEncoding::Array)
      : db_(db), encoding_(encoding) {}

  AnnotatedRelation evaluate(const NodePtr& node);

 private:
  const Database& db_;
  SetEncoding encoding_;
  std::map<const PlanNode*, AnnotatedRelation> memo_;
};

/// Direct single-query evaluation, independent of the shared operators.
Relation evaluate_query(const ir::QuerySpec& spec, const Database& db);

/// Default row a global aggregate returns over empty input (COUNT is 0, everything else NULL),
/// or nullopt when the query is not a global aggregate.
std::optional<Row> empty_group_row(const ir::QuerySpec& spec);

}  // namespace qshare::dq
