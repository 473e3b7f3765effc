#include "qshare/dq/relation.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "qshare/core/error.hpp"

namespace qshare::dq {

std::string_view to_string(AnnotationKind kind) {
  switch (kind) {
    case AnnotationKind::None: return "none";
    case AnnotationKind::Atomic: return "atomic";
    case AnnotationKind::Set: return "set";
  }
  return "?";
}

std::string_view to_string(SetEncoding encoding) {
  return encoding == SetEncoding::Array ? "array" : "bitmask";
}

QuerySet QuerySet::of(std::vector<std::uint32_t> ids, SetEncoding encoding) {
  QuerySet s(encoding);
  for (auto id : ids) s.insert(id);
  return s;
}

QuerySet QuerySet::from_mask(std::uint64_t mask) {
  QuerySet s(SetEncoding::Bitmask);
  s.mask_ = mask;
  return s;
}

bool QuerySet::empty() const {
  return encoding_ == SetEncoding::Array ? ids_.empty() : mask_ == 0;
}

std::size_t QuerySet::size() const {
  return encoding_ == SetEncoding::Array ? ids_.size()
                                         : static_cast<std::size_t>(__builtin_popcountll(mask_));
}

bool QuerySet::contains(std::uint32_t id) const {
  if (encoding_ == SetEncoding::Array) return std::binary_search(ids_.begin(), ids_.end(), id);
  return id >= 1 && id <= kBitmaskCapacity && ((mask_ >> (id - 1)) & 1U);
}

void QuerySet::insert(std::uint32_t id) {
  if (id < 1) throw PlanError("query ids start at 1");
  if (encoding_ == SetEncoding::Bitmask) {
    if (id > kBitmaskCapacity) {
      throw PlanError("query id " + std::to_string(id) + " does not fit the bitmask encoding");
    }
    mask_ |= std::uint64_t{1} << (id - 1);
    return;
  }
  auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
  if (it == ids_.end() || *it != id) ids_.insert(it, id);
}

std::vector<std::uint32_t> QuerySet::ids() const {
  if (encoding_ == SetEncoding::Array) return ids_;
  std::vector<std::uint32_t> out;
  for (std::uint32_t i = 0; i < kBitmaskCapacity; ++i) {
    if ((mask_ >> i) & 1U) out.push_back(i + 1);
  }
  return out;
}

std::uint64_t QuerySet::mask() const {
  if (encoding_ == SetEncoding::Bitmask) return mask_;
  std::uint64_t m = 0;
  for (auto id : ids_) {
    if (id > kBitmaskCapacity) {
      throw PlanError("query id " + std::to_string(id) + " does not fit the bitmask encoding");
    }
    m |= std::uint64_t{1} << (id - 1);
  }
  return m;
}

QuerySet QuerySet::intersect(const QuerySet& other) const {
  if (encoding_ == SetEncoding::Bitmask && other.encoding_ == SetEncoding::Bitmask) {
    return from_mask(mask_ & other.mask_);
  }
  QuerySet out(SetEncoding::Array);
  auto a = ids();
  auto b = other.ids();
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out.ids_));
  out.encoding_ = encoding_;
  if (encoding_ == SetEncoding::Bitmask) {
    out.mask_ = out.mask();
    out.ids_.clear();
  }
  return out;
}

Value QuerySet::to_value() const {
  if (encoding_ == SetEncoding::Bitmask) return Value(static_cast<std::int64_t>(mask_));
  IntArray arr(ids_.begin(), ids_.end());
  return Value(std::move(arr));
}

void Schema::add(ColumnRef column, LogicalType type) {
  columns.push_back(std::move(column));
  types.push_back(type);
}

std::optional<std::size_t> Schema::find(const ColumnRef& column) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == column) return i;
  }
  if (!column.table.empty()) return std::nullopt;
  std::optional<std::size_t> found;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].column == column.column) {
      if (found) return std::nullopt;
      found = i;
    }
  }
  return found;
}

std::size_t Schema::index_of(const ColumnRef& column) const {
  if (auto i = find(column)) return *i;
  throw PlanError("column '" + column.qualified() + "' is not in the input");
}

AnnotatedRelation AnnotatedRelation::plain(Relation r) {
  AnnotatedRelation out;
  out.schema = std::move(r.schema);
  out.rows = std::move(r.rows);
  return out;
}

const Relation& Database::table(const std::string& name) const {
  auto it = tables.find(name);
  if (it == tables.end()) throw CatalogError("unknown table '" + name + "'");
  return it->second;
}

Relation make_relation(const ir::TableSchema& table, std::vector<Row> rows) {
  Relation r;
  for (const auto& c : table.columns) r.schema.add({table.name, c.name}, c.type);
  r.rows = std::move(rows);
  return r;
}

Value parse_field(const std::string& text, LogicalType type) {
  if (text.empty()) return Value();
  switch (type) {
    case LogicalType::Int: {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc() || p != text.data() + text.size()) {
        throw PlanError("bad integer field '" + text + "'");
      }
      return Value(v);
    }
    case LogicalType::Double: {
      double v = 0;
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc() || p != text.data() + text.size()) {
        throw PlanError("bad double field '" + text + "'");
      }
      return Value(v);
    }
    case LogicalType::Bool:
      if (text == "true" || text == "1") return Value(true);
      if (text == "false" || text == "0") return Value(false);
      throw PlanError("bad boolean field '" + text + "'");
    case LogicalType::String:
    case LogicalType::Date: return Value(text);
    case LogicalType::IntArray: throw PlanError("array columns cannot be loaded from fixtures");
  }
  return Value();
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('|', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

Relation parse_fixture(const std::string& text, const ir::TableSchema& table) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw PlanError("fixture for '" + table.name + "' has no header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_fields(line);
  std::vector<std::size_t> positions;
  for (const auto& name : header) {
    auto idx = table.index_of(name);
    if (!idx) throw CatalogError("fixture column '" + name + "' is not in table '" + table.name + "'");
    positions.push_back(*idx);
  }
  Relation r = make_relation(table, {});
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw PlanError("fixture row for '" + table.name + "' has " + std::to_string(fields.size()) +
                      " fields, expected " + std::to_string(header.size()));
    }
    Row row(table.columns.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      row[positions[i]] = parse_field(fields[i], table.columns[positions[i]].type);
    }
    r.rows.push_back(std::move(row));
  }
  return r;
}

Relation load_fixture(const std::string& path, const ir::TableSchema& table) {
  std::ifstream in(path);
  if (!in) throw PlanError("cannot open fixture '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_fixture(ss.str(), table);
}

std::string format_fixture(const Relation& relation) {
  std::string out;
  for (std::size_t i = 0; i < relation.schema.size(); ++i) {
    if (i) out += '|';
    out += relation.schema.columns[i].column;
  }
  out += '\n';
  for (const auto& row : relation.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += '|';
      out += row[i].to_text();
    }
    out += '\n';
  }
  return out;
}

void write_fixture(const std::string& path, const Relation& relation) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PlanError("cannot write fixture '" + path + "'");
  out << format_fixture(relation);
}

Database load_database(const std::string& dir, const ir::Catalog& catalog) {
  Database db;
  for (const auto& t : catalog.tables()) {
    db.tables[t.name] = load_fixture(dir + "/" + t.name + ".tbl", t);
  }
  return db;
}

}  // namespace qshare::dq
