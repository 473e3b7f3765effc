#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qshare/core/value.hpp"
#include "qshare/ir/catalog.hpp"
#include "qshare/ir/query_spec.hpp"

namespace qshare::dq {

using ir::ColumnRef;

enum class AnnotationKind { None, Atomic, Set };
enum class SetEncoding { Array, Bitmask };

std::string_view to_string(AnnotationKind kind);
std::string_view to_string(SetEncoding encoding);

/// Largest batch the bitmask encoding can represent.
inline constexpr std::size_t kBitmaskCapacity = 64;

/// Set of query ids in one of two encodings. Array members are kept sorted and unique;
/// the bitmask encoding stores query q as bit (q - 1).
class QuerySet {
 public:
  explicit QuerySet(SetEncoding encoding = SetEncoding::Array) : encoding_(encoding) {}

  static QuerySet of(std::vector<std::uint32_t> ids, SetEncoding encoding = SetEncoding::Array);
  static QuerySet from_mask(std::uint64_t mask);

  SetEncoding encoding() const { return encoding_; }
  bool empty() const;
  std::size_t size() const;
  bool contains(std::uint32_t id) const;
  void insert(std::uint32_t id);
  std::vector<std::uint32_t> ids() const;
  std::uint64_t mask() const;  // throws PlanError for ids above 64
  QuerySet intersect(const QuerySet& other) const;

  /// Array renders as the sorted id list, bitmask as the integer mask.
  Value to_value() const;

  bool operator==(const QuerySet& other) const { return ids() == other.ids(); }

 private:
  SetEncoding encoding_;
  std::vector<std::uint32_t> ids_;
  std::uint64_t mask_ = 0;
};

struct Schema {
  std::vector<ColumnRef> columns;
  std::vector<LogicalType> types;

  std::size_t size() const { return columns.size(); }
  void add(ColumnRef column, LogicalType type);
  /// Exact match first; a reference without table matches by column name when unambiguous.
  std::optional<std::size_t> find(const ColumnRef& column) const;
  std::size_t index_of(const ColumnRef& column) const;  // throws PlanError
};

/// Plain multiset of rows.
struct Relation {
  Schema schema;
  std::vector<Row> rows;
};

/// Relation whose rows carry a query annotation. For kind None `annotations` is empty;
/// for Atomic every annotation holds exactly one id.
struct AnnotatedRelation {
  Schema schema;
  AnnotationKind kind = AnnotationKind::None;
  std::vector<Row> rows;
  std::vector<QuerySet> annotations;

  static AnnotatedRelation plain(Relation r);
  std::size_t size() const { return rows.size(); }
};

/// Base tables and temporary tables by name.
struct Database {
  std::map<std::string, Relation> tables;

  const Relation& table(const std::string& name) const;  // throws CatalogError
};

/// Builds a relation whose schema comes from the catalog table.
Relation make_relation(const ir::TableSchema& table, std::vector<Row> rows);

/// Parses one field of a fixture file. An empty field is NULL.
Value parse_field(const std::string& text, LogicalType type);

/// Fixture format: '|' separated fields, header row with column names, one row per line.
Relation load_fixture(const std::string& path, const ir::TableSchema& table);
Relation parse_fixture(const std::string& text, const ir::TableSchema& table);
std::string format_fixture(const Relation& relation);
void write_fixture(const std::string& path, const Relation& relation);

/// Loads <dir>/<table>.tbl for every catalog table.
Database load_database(const std::string& dir, const ir::Catalog& catalog);

}  // namespace qshare::dq
