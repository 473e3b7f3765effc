#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qshare/core/value.hpp"
#include "qshare/dq/relation.hpp"
#include "qshare/ir/query_spec.hpp"

namespace qshare::index {

using ir::ColumnRef;

/// A point between domain values. before(v) separates x < v from x >= v and renders as
/// `attr < v`; after(v) separates x <= v from x > v and renders as `attr <= v`.
struct Cut {
  Value value;
  bool after = false;

  static Cut before_value(Value v) { return Cut{std::move(v), false}; }
  static Cut after_value(Value v) { return Cut{std::move(v), true}; }

  /// True when x lies on the left (true-branch) side of the cut.
  bool left_of(const Value& x) const;
  bool operator==(const Cut& other) const { return compare(*this, other) == 0; }
  static int compare(const Cut& a, const Cut& b);
};

struct CutLess {
  bool operator()(const Cut& a, const Cut& b) const { return Cut::compare(a, b) < 0; }
};

/// Values right of `lower` and left of `upper`; nullopt bounds are infinite.
struct QueryInterval {
  std::uint32_t query = 0;
  ColumnRef attribute;
  std::optional<Cut> lower;
  std::optional<Cut> upper;

  bool contains(const Value& x) const;
  bool empty() const;
};

/// One disjunct of one query: an interval per indexed attribute plus residual atoms
/// that could not be indexed.
struct Box {
  std::uint32_t query = 0;
  std::map<ColumnRef, QueryInterval> ranges;
  std::vector<ir::Atom> residual;
};

struct QueryIndexability {
  std::vector<ir::Atom> indexable;
  std::vector<ir::Atom> non_indexable;
};

struct IndexabilityReport {
  std::vector<QueryIndexability> queries;  // entry i is query i + 1
  std::vector<ColumnRef> attribute_order;
};

struct IntervalSet {
  std::vector<Box> boxes;
  IndexabilityReport report;

  /// All intervals on one attribute.
  std::vector<QueryInterval> intervals(const ColumnRef& attribute) const;
  std::size_t distinct_cuts(const ColumnRef& attribute) const;
};

/// Smallest string greater than every string with prefix `p`, by incrementing the
/// final code point. nullopt when no such string exists.
std::optional<std::string> next_prefix(const std::string& p);

/// Converts per-query predicates (entry i is query i + 1) to intervals. Each disjunct is its
/// own box; IN lists expand into one box per value.
IntervalSet to_intervals(const std::vector<ir::PredicateNF>& preds);

struct IndexLeaf {
  std::vector<std::uint32_t> known;
  /// Queries decided by a residual check at this leaf, in ascending id order.
  std::vector<std::pair<std::uint32_t, ir::PredicateNF>> fallback;
};

struct IndexNode {
  bool is_leaf = true;
  ColumnRef attribute;
  Cut cut;
  std::unique_ptr<IndexNode> left;   // attribute left of cut
  std::unique_ptr<IndexNode> right;
  IndexLeaf leaf;
};

struct PredicateIndexTree {
  std::unique_ptr<IndexNode> root;
  std::vector<ColumnRef> attribute_order;
  std::size_t batch_size = 0;
};

/// Default attribute order: descending number of distinct cuts, ties by name.
std::vector<ColumnRef> default_attribute_order(const IntervalSet& set);

/// Median-split decision tree. Throws PlanError when nothing is indexable or the tree passes
/// 65536 inner nodes; callers then use
/// linear evaluation.
PredicateIndexTree build_index_tree(const IntervalSet& set, std::vector<ColumnRef> attr_order,
                                    std::size_t batch_size);
PredicateIndexTree build_index_tree(const std::vector<ir::PredicateNF>& preds);

/// Queries whose predicate matches the row. Throws PlanError when an indexed attribute is
/// missing from the schema.
std::vector<std::uint32_t> eval_tree(const PredicateIndexTree& tree, const Row& row,
                                     const dq::Schema& schema);

/// Brute-force reference: every query's predicate evaluated in turn.
std::vector<std::uint32_t> eval_linear(const std::vector<ir::PredicateNF>& preds, const Row& row,
                                       const dq::Schema& schema);

/// How leaves and atoms are spelled in SQL.
struct RenderStyle {
  std::function<std::string(const ColumnRef&)> column = [](const ColumnRef& c) { return c.column; };
  std::function<std::string(const ir::PredicateNF&)> predicate;  // residual checks
  bool bitmask = false;
  std::string array_open = "ARRAY[";
  std::string array_close = "]";
  std::string empty_array = "ARRAY[]";
  std::string remove_fn = "ARRAY_REMOVE";
  std::string bit_or = "|";
};

/// Nested CASE expression, without the AS alias.
std::string render_tree(const PredicateIndexTree& tree, const RenderStyle& style);
/// `(<expression>) AS query_set`.
std::string render_tree_column(const PredicateIndexTree& tree, const RenderStyle& style,
                               const std::string& alias = "query_set");

/// Indented text tree, one node per line.
std::string debug_dump(const PredicateIndexTree& tree);

struct TreeStats {
  std::size_t max_comparisons = 0;
  std::size_t node_count = 0;
  std::size_t leaf_count = 0;
  std::size_t estimated_bytes = 0;
};

TreeStats tree_stats(const PredicateIndexTree& tree, const RenderStyle& style = {});

}  // namespace qshare::index
