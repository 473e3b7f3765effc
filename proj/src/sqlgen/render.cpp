#include "qshare/sqlgen/render.hpp"

#include <algorithm>
#include <climits>
#include <map>
#include <set>

#include "qshare/core/error.hpp"
#include "qshare/index/predicate_index.hpp"

namespace qshare::sqlgen {

using dq::AnnotationKind;
using dq::OpKind;
using dq::PlanNode;
using dq::Schema;

namespace {

std::string join_list(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string annotation_name(AnnotationKind kind) {
  switch (kind) {
    case AnnotationKind::Set: return "query_set";
    case AnnotationKind::Atomic: return "query_id";
    case AnnotationKind::None: break;
  }
  return "";
}

std::string mask_literal(std::uint64_t mask) {
  if (mask == (std::uint64_t{1} << 63)) return "(-9223372036854775807 - 1)";
  return std::to_string(static_cast<std::int64_t>(mask));
}

std::string bit_of(std::uint32_t q) { return mask_literal(std::uint64_t{1} << (q - 1)); }

void check_encoding(const DialectProfile& dialect, std::size_t batch_size) {
  if (dialect.bitmask() && batch_size > dq::kBitmaskCapacity) {
    throw PlanError("batch of " + std::to_string(batch_size) + " queries exceeds the bitmask capacity of " +
                    std::to_string(dq::kBitmaskCapacity));
  }
}

/// Set-valued expression from (condition, query) pairs.
std::string conditional_set(const std::vector<std::pair<std::string, std::uint32_t>>& parts,
                            const DialectProfile& dialect) {
  if (parts.empty()) return dialect.bitmask() ? "0" : dialect.empty_array;
  std::vector<std::string> cases;
  for (const auto& [cond, q] : parts) {
    cases.push_back("CASE WHEN " + cond + " THEN " + (dialect.bitmask() ? bit_of(q) : std::to_string(q)) +
                    " ELSE 0 END");
  }
  if (dialect.bitmask()) return "(" + join_list(cases, " " + dialect.bit_or + " ") + ")";
  return fill(dialect.remove_element,
              {{"array", fill(dialect.array, {{"items", join_list(cases, ", ")}})}, {"value", "0"}});
}

std::string contains_sql(const std::string& set, std::uint32_t q, const DialectProfile& dialect) {
  return fill(dialect.contains, {{"set", set}, {"id", std::to_string(q)}, {"bit", bit_of(q)}});
}

std::string constant_set(std::size_t n, const DialectProfile& dialect) {
  if (dialect.bitmask()) {
    return mask_literal(n >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1);
  }
  std::vector<std::string> ids;
  for (std::size_t q = 1; q <= n; ++q) ids.push_back(std::to_string(q));
  return fill(dialect.array, {{"items", join_list(ids, ", ")}});
}

/// `(p1) OR (p2) ...` over the batch, or empty when some predicate is TRUE.
std::string disjunction(const dq::QueryPredicates& preds, const ColumnNamer& name) {
  std::vector<std::string> parts;
  for (const auto& p : preds) {
    if (p.is_true()) return "";
    if (p.is_false()) continue;
    auto part = "(" + render_predicate(p, name) + ")";
    if (std::find(parts.begin(), parts.end(), part) == parts.end()) parts.push_back(std::move(part));
  }
  if (parts.empty()) return "FALSE";
  return join_list(parts, " OR ");
}

std::string select_columns(const std::vector<std::string>& in, const std::vector<std::string>& out,
                           const std::string& qualifier = "") {
  std::vector<std::string> items;
  for (std::size_t i = 0; i < in.size(); ++i) {
    std::string col = qualifier.empty() ? in[i] : qualifier + "." + in[i];
    items.push_back(in[i] == out[i] ? col : col + " AS " + out[i]);
  }
  return join_list(items, ", ");
}

index::RenderStyle style_for(const DialectProfile& dialect, const ColumnNamer& name) {
  index::RenderStyle style;
  style.column = name;
  style.predicate = [name](const ir::PredicateNF& p) { return render_predicate(p, name); };
  style.bitmask = dialect.bitmask();
  auto pos = dialect.array.find("{items}");
  style.array_open = dialect.array.substr(0, pos);
  style.array_close = pos == std::string::npos ? "" : dialect.array.substr(pos + 7);
  style.empty_array = dialect.empty_array;
  style.remove_fn = dialect.remove_element.substr(0, dialect.remove_element.find('('));
  style.bit_or = dialect.bit_or;
  return style;
}

std::string atom_sql(const ir::Atom& a, const ColumnNamer& name) {
  std::string col = name(a.column);
  auto k = [](const ir::Constant& c) { return c.is_param() ? std::string("?") : c.value.to_sql(); };
  switch (a.op) {
    case ir::CompareOp::Between: return col + " BETWEEN " + k(a.operands[0]) + " AND " + k(a.operands[1]);
    case ir::CompareOp::In: {
      std::vector<std::string> items;
      for (const auto& c : a.operands) items.push_back(k(c));
      return col + " IN (" + join_list(items, ", ") + ")";
    }
    default: return col + " " + std::string(ir::to_string(a.op)) + " " + k(a.operands[0]);
  }
}

std::string aggregate_sql(const ir::Aggregate& agg, const ColumnNamer& name, const DialectProfile& dialect) {
  return std::string(ir::to_string(agg.func)) + "(" + (agg.arg ? render_scalar(*agg.arg, name, dialect) : "*") +
         ")";
}

}  // namespace

std::string_view to_string(ScanMode mode) { return mode == ScanMode::Linear ? "linear" : "indexed"; }

ScanMode parse_scan_mode(std::string_view name) {
  if (name == "linear") return ScanMode::Linear;
  if (name == "indexed") return ScanMode::Indexed;
  throw PlanError("unknown scan mode '" + std::string(name) + "'");
}

std::string Fragment::to_sql() const {
  if (ctes.empty()) return select;
  std::string out = "WITH ";
  for (std::size_t i = 0; i < ctes.size(); ++i) {
    if (i) out += ",\n";
    out += ctes[i].first + " AS (\n" + ctes[i].second + ")";
  }
  return out + "\n" + select;
}
namespace {

constexpr std::size_t kIndexedGrowthLimit = 8;
constexpr std::size_t kIndexedFloorBytes = 32 * 1024;

/// Per-row set of matching queries. Indexed mode uses the predicate index unless nothing is
/// indexable or the tree renders far larger than the linear form.
std::string annotation_set(const std::vector<ir::PredicateNF>& preds, ScanMode mode, const DialectProfile& dialect,
                           const ColumnNamer& name) {
  if (preds.size() == 1) return constant_set(1, dialect);
  std::vector<std::pair<std::string, std::uint32_t>> parts;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    parts.emplace_back(render_predicate(preds[i], name), static_cast<std::uint32_t>(i + 1));
  }
  std::string linear = conditional_set(parts, dialect);
  if (mode != ScanMode::Indexed) return linear;
  try {
    auto tree = index::build_index_tree(preds);
    auto stats = index::tree_stats(tree);
    if (stats.estimated_bytes > kIndexedGrowthLimit * linear.size() && stats.estimated_bytes > kIndexedFloorBytes) {
      return linear;
    }
    return index::render_tree(tree, style_for(dialect, name));
  } catch (const PlanError&) {
    return linear;
  }
}

}  // namespace

std::vector<std::string> column_names(const Schema& schema) {
  std::map<std::string, int> uses;
  for (const auto& c : schema.columns) ++uses[c.column];
  std::vector<std::string> out;
  for (const auto& c : schema.columns) {
    out.push_back(c.table.empty() || uses[c.column] == 1 ? c.column : c.table + "_" + c.column);
  }
  return out;
}

ColumnNamer namer_for(const Schema& schema) {
  auto names = column_names(schema);
  return [schema, names](const ir::ColumnRef& ref) {
    auto i = schema.find(ref);
    if (!i) throw PlanError("column '" + ref.qualified() + "' is not in the input");
    return names[*i];
  };
}

std::string render_predicate(const ir::PredicateNF& pred, const ColumnNamer& name) {
  if (pred.is_false()) return "FALSE";
  if (pred.is_true()) return "TRUE";
  auto conj = [&](const ir::Conjunction& c) {
    std::vector<std::string> atoms;
    for (const auto& a : c.atoms) atoms.push_back(atom_sql(a, name));
    return join_list(atoms, " AND ");
  };
  if (pred.disjuncts.size() == 1) return conj(pred.disjuncts[0]);
  std::vector<std::string> parts;
  for (const auto& d : pred.disjuncts) parts.push_back("(" + conj(d) + ")");
  return join_list(parts, " OR ");
}

std::string render_scalar(const ir::ScalarExpr& e, const ColumnNamer& name, const DialectProfile& dialect) {
  using K = ir::ScalarExpr::Kind;
  switch (e.kind) {
    case K::Column: return name(e.column);
    case K::Literal: return e.literal.to_sql();
    case K::Negate: return "(-" + render_scalar(e.args[0], name, dialect) + ")";
    case K::Binary: {
      auto l = render_scalar(e.args[0], name, dialect);
      auto r = render_scalar(e.args[1], name, dialect);
      if (e.op == '/') return fill(dialect.divide, {{"left", l}, {"right", r}});
      return "(" + l + " " + e.op + " " + r + ")";
    }
  }
  return "";
}

Fragment gen_shared_scan_sql(const PlanNode& scan, ScanMode mode, const DialectProfile& dialect,
                             const ir::Catalog& catalog) {
  if (scan.kind != OpKind::Scan) throw PlanError("shared scan SQL needs a scan node");
  const auto& table = catalog.table(scan.table);
  std::vector<std::string> all;
  for (const auto& c : table.columns) all.push_back(c.name);
  std::string cols = scan.columns == all ? "*" : join_list(scan.columns, ", ");
  ColumnNamer bare = [](const ir::ColumnRef& c) { return c.column; };

  if (!scan.annotate) {
    std::string sql = "SELECT " + cols + "\nFROM " + table.name;
    if (!scan.filter.is_true()) sql += "\nWHERE " + render_predicate(scan.filter, bare);
    return {{}, sql};
  }

  std::size_t n = scan.preds.size();
  if (n == 0) throw PlanError("annotated scan over an empty batch");
  check_encoding(dialect, n);
  std::string set = annotation_set(scan.preds, mode, dialect, bare);
  std::string sql = "SELECT " + cols + ",\n" + set + " AS " + dialect.annotation_column() + "\nFROM " + table.name;
  auto where = disjunction(scan.preds, bare);
  if (!where.empty()) sql += "\nWHERE " + where;
  return {{}, sql};
}

Fragment gen_shared_join_sql(const PlanNode& join, const InputRef& left, const InputRef& right,
                             const DialectProfile& dialect, const std::string& name) {
  if (join.kind != OpKind::Join) throw PlanError("shared join SQL needs a join node");
  if (join.keys.empty()) throw PlanError("join without keys");
  auto lnames = column_names(left.schema);
  auto rnames = column_names(right.schema);
  Schema out = left.schema;
  for (std::size_t i = 0; i < right.schema.size(); ++i) out.add(right.schema.columns[i], right.schema.types[i]);
  auto onames = column_names(out);
  std::vector<std::string> lout(onames.begin(), onames.begin() + lnames.size());
  std::vector<std::string> rout(onames.begin() + lnames.size(), onames.end());
  std::string items = select_columns(lnames, lout, left.name);
  if (!rnames.empty()) items += ", " + select_columns(rnames, rout, right.name);

  auto lname = namer_for(left.schema);
  auto rname = namer_for(right.schema);
  std::vector<std::string> on;
  for (const auto& [l, r] : join.keys) {
    on.push_back(left.name + "." + lname(l) + " = " + right.name + "." + rname(r));
  }
  std::string from = "FROM " + left.name + " JOIN " + right.name + " ON ";
  const std::string lset = left.name + ".query_set", rset = right.name + ".query_set";
  const std::string lid = left.name + ".query_id", rid = right.name + ".query_id";

  auto lk = left.kind, rk = right.kind;
  if (lk == AnnotationKind::None || rk == AnnotationKind::None) {
    const InputRef& annotated = lk == AnnotationKind::None ? right : left;
    std::string ann = annotated.kind == AnnotationKind::None
                          ? ""
                          : ", " + annotated.name + "." + annotation_name(annotated.kind);
    return {{}, "SELECT " + items + ann + "\n" + from + join_list(on, " AND ")};
  }
  if (lk == AnnotationKind::Set && rk == AnnotationKind::Set) {
    std::string helper = name + "_helper";
    std::string body = "SELECT " + items + ",\n" + fill(dialect.intersect, {{"left", lset}, {"right", rset}}) +
                       " AS query_set\n" + from + join_list(on, " AND ");
    return {{{helper, body}},
            "SELECT *\nFROM " + helper + "\nWHERE " + fill(dialect.nonempty, {{"set", "query_set"}})};
  }
  if (lk == AnnotationKind::Atomic && rk == AnnotationKind::Atomic) {
    on.push_back(lid + " = " + rid);
    return {{}, "SELECT " + items + ", " + lid + "\n" + from + join_list(on, " AND ")};
  }
  // One side atomic, the other a set: keep rows whose set holds the query id.
  const std::string& id = lk == AnnotationKind::Atomic ? lid : rid;
  const std::string& set = lk == AnnotationKind::Set ? lset : rset;
  std::string member = dialect.bitmask() ? fill(dialect.contains, {{"set", set}, {"bit", "(1 << (" + id + " - 1))"}})
                                         : fill(dialect.contains, {{"set", set}, {"id", id}});
  on.push_back(member);
  return {{}, "SELECT " + items + ", " + id + "\n" + from + join_list(on, " AND ")};
}

Fragment gen_shared_select_sql(const PlanNode& select, const InputRef& input, ScanMode mode,
                               const DialectProfile& dialect, const std::string& name) {
  if (select.kind != OpKind::Select) throw PlanError("shared select SQL needs a select node");
  auto col = namer_for(input.schema);
  auto names = column_names(input.schema);
  std::string cols = names.empty() ? "" : join_list(names, ", ");
  std::size_t n = select.preds.size();
  check_encoding(dialect, n);

  if (input.kind == AnnotationKind::Atomic) {
    std::vector<std::string> parts;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& p = select.preds[i];
      if (p.is_false()) continue;
      std::string id = "query_id = " + std::to_string(i + 1);
      parts.push_back(p.is_true() ? id : "(" + id + " AND (" + render_predicate(p, col) + "))");
    }
    std::string where = parts.empty() ? "FALSE" : join_list(parts, " OR ");
    return {{}, "SELECT *\nFROM " + input.name + "\nWHERE " + where};
  }

  if (input.kind == AnnotationKind::None) {
    // Same as a shared scan over the input relation.
    std::string set = annotation_set(select.preds, mode, dialect, col);
    std::string sql = "SELECT " + (cols.empty() ? "" : cols + ",\n") + set + " AS query_set\nFROM " + input.name;
    auto where = disjunction(select.preds, col);
    if (!where.empty()) sql += "\nWHERE " + where;
    return {{}, sql};
  }

  std::vector<std::pair<std::string, std::uint32_t>> parts;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = select.preds[i];
    auto q = static_cast<std::uint32_t>(i + 1);
    std::string in_set = contains_sql("query_set", q, dialect);
    if (p.is_false()) continue;
    parts.emplace_back(p.is_true() ? in_set : in_set + " AND (" + render_predicate(p, col) + ")", q);
  }
  std::string helper = name + "_helper";
  std::string body = "SELECT " + (cols.empty() ? "" : cols + ",\n") + conditional_set(parts, dialect) +
                     " AS query_set\nFROM " + input.name;
  return {{{helper, body}}, "SELECT *\nFROM " + helper + "\nWHERE " + fill(dialect.nonempty, {{"set", "query_set"}})};
}

Fragment gen_unnest_sql(const InputRef& input, const DialectProfile& dialect, bool keep_all) {
  if (input.kind == AnnotationKind::None) throw PlanError("unnest over an unannotated input");
  if (input.kind == AnnotationKind::Atomic) return {{}, "SELECT *\nFROM " + input.name};
  std::string cols = "*";
  if (!keep_all) {
    auto names = column_names(input.schema);
    names.push_back("query_id");
    cols = join_list(names, ", ");
  }
  return {{},
          "SELECT " + cols + "\nFROM " + input.name + "\n" + fill(dialect.unnest, {{"set", "query_set"}}) +
              "\nWHERE " + fill(dialect.unnest_filter, {{"set", "query_set"}})};
}

Fragment gen_shared_group_sql(const PlanNode& group, const InputRef& input, const DialectProfile& dialect,
                              const std::string& unnest_name) {
  if (group.kind != OpKind::Group) throw PlanError("shared group SQL needs a group node");
  if (input.kind == AnnotationKind::None) throw PlanError("group over an unannotated input");
  Fragment out;
  std::string source = input.name;
  if (input.kind == AnnotationKind::Set) {
    out.ctes.emplace_back(unnest_name, gen_unnest_sql(input, dialect, true).select);
    source = unnest_name;
  }
  auto col = namer_for(input.schema);
  Schema keys_schema;
  for (const auto& k : group.group_keys) {
    auto i = input.schema.index_of(k);
    keys_schema.add(input.schema.columns[i], input.schema.types[i]);
  }
  Schema out_schema = keys_schema;
  for (const auto& a : group.aggs) out_schema.add({"", a.name}, LogicalType::Int);
  auto out_names = column_names(out_schema);

  std::vector<std::string> items{"query_id"};
  std::vector<std::string> by{"query_id"};
  for (std::size_t i = 0; i < group.group_keys.size(); ++i) {
    auto in = col(group.group_keys[i]);
    items.push_back(in == out_names[i] ? in : in + " AS " + out_names[i]);
    by.push_back(in);
  }
  for (std::size_t i = 0; i < group.aggs.size(); ++i) {
    const auto& a = group.aggs[i];
    std::string item = aggregate_sql(a.agg, col, dialect);
    if (!a.name.empty()) item += " AS " + a.name;
    items.push_back(item);
  }
  out.select = "SELECT " + join_list(items, ", ") + "\nFROM " + source + "\nGROUP BY " + join_list(by, ", ");
  return out;
}

Fragment gen_project_sql(const PlanNode& project, const InputRef& input, const DialectProfile& dialect) {
  if (project.kind != OpKind::Project) throw PlanError("project SQL needs a project node");
  auto col = namer_for(input.schema);
  Schema out_schema;
  for (const auto& item : project.items) out_schema.add(item.name, LogicalType::Int);
  auto out_names = column_names(out_schema);
  std::vector<std::string> items;
  for (std::size_t i = 0; i < project.items.size(); ++i) {
    auto e = render_scalar(project.items[i].expr, col, dialect);
    items.push_back(e == out_names[i] ? e : e + " AS " + out_names[i]);
  }
  if (input.kind != AnnotationKind::None) items.push_back(annotation_name(input.kind));
  return {{}, "SELECT " + join_list(items, ", ") + "\nFROM " + input.name};
}

Fragment gen_order_limit_sql(const PlanNode& order, const InputRef& input, const DialectProfile& dialect,
                             const std::string& name) {
  if (order.kind != OpKind::OrderLimit) throw PlanError("order/limit SQL needs an order_limit node");
  auto col = namer_for(input.schema);
  std::vector<std::string> keys;
  for (const auto& k : order.sort) keys.push_back(col(k.column) + (k.descending ? " DESC" : ""));
  bool limited = std::any_of(order.limits.begin(), order.limits.end(), [](const auto& l) { return l.has_value(); });
  bool atomic = input.kind == AnnotationKind::Atomic;
  std::vector<std::string> by = keys;
  if (atomic) by.insert(by.begin(), "query_id");

  if (!limited) {
    std::string sql = "SELECT *\nFROM " + input.name;
    if (!by.empty()) sql += "\nORDER BY " + join_list(by, ", ");
    return {{}, sql};
  }
  if (!atomic) throw PlanError("order_limit with limits over a non-atomic input");
  if (!dialect.supports_window) {
    throw UnsupportedError("LIMIT in a shared plan on dialect '" + dialect.name + "' without window functions");
  }
  std::string window = "PARTITION BY query_id";
  if (!keys.empty()) window += " ORDER BY " + join_list(keys, ", ");
  std::string ranked = name + "_ranked";
  std::string body = "SELECT *, " + fill(dialect.row_number, {{"window", window}}) + " AS rn\nFROM " + input.name;

  // Queries with the same limit share one condition.
  std::map<std::uint64_t, std::vector<std::string>> by_limit;
  std::vector<std::string> unlimited;
  for (std::size_t i = 0; i < order.limits.size(); ++i) {
    if (order.limits[i]) {
      by_limit[*order.limits[i]].push_back(std::to_string(i + 1));
    } else {
      unlimited.push_back(std::to_string(i + 1));
    }
  }
  std::vector<std::string> conds;
  for (const auto& [k, ids] : by_limit) {
    if (k == 0) continue;
    conds.push_back("(rn <= " + std::to_string(k) + " AND query_id IN (" + join_list(ids, ", ") + "))");
  }
  if (!unlimited.empty()) conds.push_back("query_id IN (" + join_list(unlimited, ", ") + ")");
  auto names = column_names(input.schema);
  names.push_back("query_id");
  std::string sql = "SELECT " + join_list(names, ", ") + "\nFROM " + ranked + "\nWHERE " +
                    (conds.empty() ? "FALSE" : join_list(conds, " OR ")) + "\nORDER BY " + join_list(by, ", ");
  return {{{ranked, body}}, sql};
}

RenderedQuery finish(const Fragment& fragment, const Schema& schema, AnnotationKind kind,
                     const DialectProfile& dialect) {
  RenderedQuery out;
  out.sql = fragment.to_sql();
  out.bytes = out.sql.size();
  if (out.bytes > dialect.max_query_bytes) throw SizeError(out.bytes, dialect.max_query_bytes);
  out.columns = column_names(schema);
  out.types = schema.types;
  out.annotation_column = annotation_name(kind);
  if (!out.annotation_column.empty()) {
    out.columns.push_back(out.annotation_column);
    out.types.push_back(kind == AnnotationKind::Set && !dialect.bitmask() ? LogicalType::IntArray
                                                                           : LogicalType::Int);
  }
  return out;
}

namespace {

class PlanRenderer {
 public:
  PlanRenderer(const DialectProfile& dialect, const ir::Catalog& catalog, ScanMode mode)
      : dialect_(dialect), catalog_(catalog), mode_(mode) {}

  RenderedQuery render(const dq::NodePtr& root) {
    for (const auto& in : root->inputs) input(in);
    auto frag = fragment(*root, cte_name(*root));
    auto schema = dq::output_schema(*root, catalog_);
    auto kind = dq::output_kind(*root);
    if (root->kind == OpKind::Group) {
      // Move the annotation to the end.
      std::string name = cte_name(*root);
      add_cte(name, frag);
      auto names = column_names(schema);
      names.push_back("query_id");
      frag = {{}, "SELECT " + join_list(names, ", ") + "\nFROM " + name};
    }
    Fragment all{ctes_, frag.select};
    all.ctes.insert(all.ctes.end(), frag.ctes.begin(), frag.ctes.end());
    return finish(all, schema, kind, dialect_);
  }

 private:
  std::string next_name(const std::string& prefix) { return prefix + "_" + std::to_string(++counter_); }

  void add_cte(const std::string& name, const Fragment& frag) {
    ctes_.insert(ctes_.end(), frag.ctes.begin(), frag.ctes.end());
    ctes_.emplace_back(name, frag.select);
  }

  InputRef input(const dq::NodePtr& node) {
    auto it = done_.find(node.get());
    if (it != done_.end()) return it->second;
    for (const auto& in : node->inputs) input(in);
    InputRef ref;
    ref.schema = dq::output_schema(*node, catalog_);
    ref.kind = dq::output_kind(*node);
    if (node->kind == OpKind::TempScan) {
      ref.name = node->temp_name;
    } else {
      ref.name = cte_name(*node);
      add_cte(ref.name, fragment(*node, ref.name));
    }
    done_.emplace(node.get(), ref);
    return ref;
  }

  std::string cte_name(const PlanNode& n) {
    switch (n.kind) {
      case OpKind::Scan: {
        std::string base = "sscan_" + n.table;
        if (used_.insert(base).second) return base;
        return next_name(base);
      }
      case OpKind::Select: return next_name("ssel");
      case OpKind::Join: return next_name("sjoin");
      case OpKind::Unnest: return next_name("unnest");
      case OpKind::Group: return next_name("sgroup");
      case OpKind::Project: return next_name("sproj");
      case OpKind::OrderLimit: return next_name("sorder");
      case OpKind::TempScan: return n.temp_name;
    }
    return next_name("cte");
  }

  /// Inputs must already be rendered.
  Fragment fragment(const PlanNode& n, const std::string& name) {
    auto in = [&](std::size_t i) { return done_.at(n.inputs[i].get()); };
    switch (n.kind) {
      case OpKind::Scan: return gen_shared_scan_sql(n, mode_, dialect_, catalog_);
      case OpKind::TempScan: return {{}, "SELECT *\nFROM " + n.temp_name};
      case OpKind::Select: return gen_shared_select_sql(n, in(0), mode_, dialect_, name);
      case OpKind::Join: return gen_shared_join_sql(n, in(0), in(1), dialect_, name);
      case OpKind::Unnest: return gen_unnest_sql(in(0), dialect_);
      case OpKind::Group: return gen_shared_group_sql(n, in(0), dialect_, name + "_unnest");
      case OpKind::Project: return gen_project_sql(n, in(0), dialect_);
      case OpKind::OrderLimit: return gen_order_limit_sql(n, in(0), dialect_, name);
    }
    return {};
  }

  const DialectProfile& dialect_;
  const ir::Catalog& catalog_;
  ScanMode mode_;
  int counter_ = 0;
  std::set<std::string> used_;
  std::map<const PlanNode*, InputRef> done_;
  std::vector<std::pair<std::string, std::string>> ctes_;
};

}  // namespace

RenderedQuery render_plan(const dq::NodePtr& root, const DialectProfile& dialect, const ir::Catalog& catalog,
                          ScanMode mode) {
  if (!root) throw PlanError("empty plan");
  dq::check_plan(*root);
  return PlanRenderer(dialect, catalog, mode).render(root);
}

}  // namespace qshare::sqlgen
