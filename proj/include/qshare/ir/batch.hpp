#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qshare/core/value.hpp"
#include "qshare/ir/query_spec.hpp"

namespace qshare::ir {

/// Dense 1-based identifier of a query inside its batch.
struct QueryId {
  std::uint32_t value = 1;

  auto operator<=>(const QueryId&) const = default;
};

/// Smallest integer width in bits (8, 16, 32 or 64) that holds ids up to `batch_size`.
int query_id_width(std::size_t batch_size);

/// One record of a batch input file.
struct QueryRecord {
  std::string id;
  std::string sql;
  std::vector<Value> bindings;
};

/// Reads newline-delimited records {"id":..,"sql":..,"bindings":[..]}. Blank lines are skipped.
std::vector<QueryRecord> parse_batch_text(const std::string& text);
std::vector<QueryRecord> read_batch_file(const std::string& path);
std::string to_batch_text(const std::vector<QueryRecord>& records);

Value value_from_json_text(const std::string& json);

struct BatchMember {
  QueryId id;
  std::string original_id;
  QuerySpec spec;  // parameters bound
};

struct QueryBatch {
  std::uint64_t batch_id = 0;
  std::vector<BatchMember> members;
  std::uint64_t template_id = 0;  // 0 when members mix templates

  std::size_t size() const { return members.size(); }
  const BatchMember& member(QueryId id) const;  // throws PlanError
};

enum class GroupingPolicy { PerTemplate, Global };

std::string_view to_string(GroupingPolicy policy);
GroupingPolicy parse_grouping_policy(std::string_view name);

struct Placement {
  std::size_t batch_index = 0;
  QueryId id;
};

struct Batching {
  std::vector<QueryBatch> batches;
  std::map<std::string, Placement> placement;  // original id -> (batch, QueryId)
};

/// Partitions queries into batches of at most `max_size`. Original ids must be unique.
Batching group_batch(const std::vector<std::pair<std::string, QuerySpec>>& queries,
                     GroupingPolicy policy, std::size_t max_size);

/// Parses and binds every record. Throws on the first failing record.
std::vector<std::pair<std::string, QuerySpec>> parse_records(const std::vector<QueryRecord>& records,
                                                             const Catalog& catalog);

}  // namespace qshare::ir
