#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qshare/dq/relation.hpp"
#include "qshare/ir/batch.hpp"

namespace qshare::dq {

/// Per-query predicates; entry i belongs to query i + 1.
using QueryPredicates = std::vector<ir::PredicateNF>;

bool eval_atom(const ir::Atom& atom, const Row& row, const Schema& schema);
/// WHERE semantics: comparisons with NULL are not satisfied.
bool eval_predicate(const ir::PredicateNF& pred, const Row& row, const Schema& schema);
Value eval_scalar(const ir::ScalarExpr& expr, const Row& row, const Schema& schema);
LogicalType scalar_type(const ir::ScalarExpr& expr, const Schema& schema);
LogicalType aggregate_type(const ir::Aggregate& agg, const Schema& schema);

/// Applies binary arithmetic with the engine's rules: int op int stays int except '/',
/// which always yields a double; division by zero and NULL operands yield NULL.
Value arithmetic(char op, const Value& lhs, const Value& rhs);

/// Running state of one aggregate over a group.
class Accumulator {
 public:
  explicit Accumulator(ir::AggFunc func) : func_(func) {}
  void add(const Value& v);  // COUNT(*) callers pass a non-null value
  Value result() const;

 private:
  ir::AggFunc func_;
  std::int64_t count_ = 0;
  bool any_double_ = false;
  std::int64_t int_sum_ = 0;
  double double_sum_ = 0;
  Value best_;
};

struct NamedAggregate {
  ir::Aggregate agg;
  std::string name;

  bool operator==(const NamedAggregate&) const = default;
};

struct ProjectItem {
  ir::ScalarExpr expr;
  ColumnRef name;  // output column

  bool operator==(const ProjectItem&) const = default;
};

struct SortKey {
  ColumnRef column;
  bool descending = false;

  bool operator==(const SortKey&) const = default;
};

using JoinKeys = std::vector<std::pair<ColumnRef, ColumnRef>>;

AnnotatedRelation shared_scan(const Relation& table, const QueryPredicates& preds,
                              SetEncoding encoding = SetEncoding::Array);
AnnotatedRelation filter_scan(const Relation& table, const ir::PredicateNF& filter);
AnnotatedRelation shared_select(const AnnotatedRelation& input, const QueryPredicates& preds,
                                SetEncoding encoding = SetEncoding::Array);
AnnotatedRelation shared_join(const AnnotatedRelation& left, const AnnotatedRelation& right,
                              const JoinKeys& keys);
AnnotatedRelation unnest_query_set(const AnnotatedRelation& input);
AnnotatedRelation shared_group_by(const AnnotatedRelation& input, const std::vector<ColumnRef>& keys,
                                  const std::vector<NamedAggregate>& aggs);
AnnotatedRelation shared_project(const AnnotatedRelation& input, const std::vector<ProjectItem>& items);
/// `limits[i]` is query i + 1's limit; an empty vector means no limits.
AnnotatedRelation shared_order_limit(const AnnotatedRelation& input, const std::vector<SortKey>& keys,
                                     const std::vector<std::optional<std::uint64_t>>& limits);
/// Rows relevant to `q` with the annotation projected away. Throws PlanError when q is
/// outside 1..batch_size.
Relation demux(const AnnotatedRelation& input, ir::QueryId q, std::size_t batch_size);

}  // namespace qshare::dq
