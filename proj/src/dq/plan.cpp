#include "qshare/dq/plan.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "qshare/core/error.hpp"

namespace qshare::dq {

std::string_view to_string(OpKind kind) {
  switch (kind) {
    case OpKind::Scan: return "scan";
    case OpKind::TempScan: return "temp_scan";
    case OpKind::Select: return "select";
    case OpKind::Join: return "join";
    case OpKind::Unnest: return "unnest";
    case OpKind::Group: return "group";
    case OpKind::Project: return "project";
    case OpKind::OrderLimit: return "order_limit";
  }
  return "?";
}

namespace {

NodePtr node(OpKind kind, std::vector<NodePtr> inputs) {
  auto n = std::make_shared<PlanNode>();
  n->kind = kind;
  n->inputs = std::move(inputs);
  for (const auto& in : n->inputs) n->batch_size = std::max(n->batch_size, in->batch_size);
  return n;
}

}  // namespace

NodePtr make_scan(const ir::TableSchema& table, std::vector<std::string> columns, QueryPredicates preds) {
  auto n = node(OpKind::Scan, {});
  n->table = table.name;
  n->columns = std::move(columns);
  n->annotate = true;
  n->batch_size = preds.size();
  n->preds = std::move(preds);
  return n;
}

NodePtr make_filter_scan(const ir::TableSchema& table, std::vector<std::string> columns,
                         ir::PredicateNF filter) {
  auto n = node(OpKind::Scan, {});
  n->table = table.name;
  n->columns = std::move(columns);
  n->filter = std::move(filter);
  return n;
}

NodePtr make_select(NodePtr input, QueryPredicates preds) {
  auto n = node(OpKind::Select, {std::move(input)});
  n->batch_size = std::max(n->batch_size, preds.size());
  n->preds = std::move(preds);
  return n;
}

NodePtr make_join(NodePtr left, NodePtr right, JoinKeys keys) {
  auto n = node(OpKind::Join, {std::move(left), std::move(right)});
  n->keys = std::move(keys);
  return n;
}

NodePtr make_unnest(NodePtr input) { return node(OpKind::Unnest, {std::move(input)}); }

NodePtr make_group(NodePtr input, std::vector<ColumnRef> keys, std::vector<NamedAggregate> aggs) {
  auto n = node(OpKind::Group, {std::move(input)});
  n->group_keys = std::move(keys);
  n->aggs = std::move(aggs);
  return n;
}

NodePtr make_project(NodePtr input, std::vector<ProjectItem> items) {
  auto n = node(OpKind::Project, {std::move(input)});
  n->items = std::move(items);
  return n;
}

NodePtr make_order_limit(NodePtr input, std::vector<SortKey> keys,
                         std::vector<std::optional<std::uint64_t>> limits) {
  auto n = node(OpKind::OrderLimit, {std::move(input)});
  n->sort = std::move(keys);
  n->limits = std::move(limits);
  return n;
}

NodePtr make_temp_scan(std::string name, Schema schema) {
  auto n = node(OpKind::TempScan, {});
  n->temp_name = std::move(name);
  n->temp_schema = std::move(schema);
  return n;
}

Schema output_schema(const PlanNode& n, const ir::Catalog& catalog) {
  switch (n.kind) {
    case OpKind::Scan: {
      const auto& t = catalog.table(n.table);
      Schema s;
      for (const auto& c : n.columns) {
        const auto* col = t.find(c);
        if (!col) throw CatalogError("unknown column '" + n.table + "." + c + "'");
        s.add({t.name, c}, col->type);
      }
      return s;
    }
    case OpKind::TempScan: return n.temp_schema;
    case OpKind::Select:
    case OpKind::Unnest:
    case OpKind::OrderLimit: return output_schema(*n.inputs[0], catalog);
    case OpKind::Join: {
      Schema s = output_schema(*n.inputs[0], catalog);
      Schema r = output_schema(*n.inputs[1], catalog);
      for (std::size_t i = 0; i < r.size(); ++i) s.add(r.columns[i], r.types[i]);
      return s;
    }
    case OpKind::Group: {
      Schema in = output_schema(*n.inputs[0], catalog);
      Schema s;
      for (const auto& k : n.group_keys) {
        auto i = in.index_of(k);
        s.add(in.columns[i], in.types[i]);
      }
      for (const auto& a : n.aggs) s.add({"", a.name}, aggregate_type(a.agg, in));
      return s;
    }
    case OpKind::Project: {
      Schema in = output_schema(*n.inputs[0], catalog);
      Schema s;
      for (const auto& item : n.items) s.add(item.name, scalar_type(item.expr, in));
      return s;
    }
  }
  return {};
}

AnnotationKind output_kind(const PlanNode& n) {
  using K = AnnotationKind;
  switch (n.kind) {
    case OpKind::Scan: return n.annotate ? K::Set : K::None;
    case OpKind::TempScan: return K::None;
    case OpKind::Select: {
      auto in = output_kind(*n.inputs[0]);
      return in == K::None ? K::Set : in;
    }
    case OpKind::Join: {
      auto l = output_kind(*n.inputs[0]);
      auto r = output_kind(*n.inputs[1]);
      if (l == K::None) return r;
      if (r == K::None) return l;
      return l == K::Set && r == K::Set ? K::Set : K::Atomic;
    }
    case OpKind::Unnest:
    case OpKind::Group: return K::Atomic;
    case OpKind::Project:
    case OpKind::OrderLimit: return output_kind(*n.inputs[0]);
  }
  return K::None;
}

void check_plan(const PlanNode& n) {
  for (const auto& in : n.inputs) check_plan(*in);
  using K = AnnotationKind;
  switch (n.kind) {
    case OpKind::Unnest:
    case OpKind::Group:
      if (output_kind(*n.inputs[0]) == K::None) {
        throw PlanError(std::string(to_string(n.kind)) + " over an unannotated input");
      }
      break;
    case OpKind::OrderLimit: {
      bool limited = std::any_of(n.limits.begin(), n.limits.end(), [](const auto& l) { return l.has_value(); });
      if (limited && output_kind(*n.inputs[0]) != K::Atomic) {
        throw PlanError("order_limit with limits over a non-atomic input");
      }
      break;
    }
    case OpKind::Join:
      if (n.keys.empty()) throw PlanError("join without keys");
      break;
    default: break;
  }
}

AnnotatedRelation Evaluator::evaluate(const NodePtr& n) {
  auto it = memo_.find(n.get());
  if (it != memo_.end()) return it->second;
  AnnotatedRelation out;
  switch (n->kind) {
    case OpKind::Scan: {
      const Relation& base = db_.table(n->table);
      Relation projected;
      std::vector<std::size_t> idx;
      for (const auto& c : n->columns) {
        idx.push_back(base.schema.index_of({n->table, c}));
        projected.schema.add(base.schema.columns[idx.back()], base.schema.types[idx.back()]);
      }
      // predicates may read columns outside the projection, so evaluate on the base row
      if (n->annotate) {
        AnnotatedRelation full = shared_scan(base, n->preds, encoding_);
        out.schema = projected.schema;
        out.kind = full.kind;
        out.annotations = std::move(full.annotations);
        for (auto& row : full.rows) {
          Row r;
          for (auto i : idx) r.push_back(row[i]);
          out.rows.push_back(std::move(r));
        }
      } else {
        out.schema = projected.schema;
        for (const auto& row : base.rows) {
          if (!eval_predicate(n->filter, row, base.schema)) continue;
          Row r;
          for (auto i : idx) r.push_back(row[i]);
          out.rows.push_back(std::move(r));
        }
      }
      break;
    }
    case OpKind::TempScan: {
      const Relation& t = db_.table(n->temp_name);
      out.schema = n->temp_schema;
      out.rows = t.rows;
      break;
    }
    case OpKind::Select: out = shared_select(evaluate(n->inputs[0]), n->preds, encoding_); break;
    case OpKind::Join: out = shared_join(evaluate(n->inputs[0]), evaluate(n->inputs[1]), n->keys); break;
    case OpKind::Unnest: out = unnest_query_set(evaluate(n->inputs[0])); break;
    case OpKind::Group: out = shared_group_by(evaluate(n->inputs[0]), n->group_keys, n->aggs); break;
    case OpKind::Project: out = shared_project(evaluate(n->inputs[0]), n->items); break;
    case OpKind::OrderLimit: out = shared_order_limit(evaluate(n->inputs[0]), n->sort, n->limits); break;
  }
  memo_.emplace(n.get(), out);
  return out;
}

namespace {

struct RowKeyHash {
  std::size_t operator()(const Row& r) const { return RowHash{}(r); }
};

}  // namespace

Relation evaluate_query(const ir::QuerySpec& spec, const Database& db) {
  // join the base relations in order
  const Relation& first = db.table(spec.base_relations.front());
  Schema schema = first.schema;
  std::vector<Row> rows = first.rows;
  std::vector<std::string> joined{spec.base_relations.front()};
  for (std::size_t t = 1; t < spec.base_relations.size(); ++t) {
    const Relation& next = db.table(spec.base_relations[t]);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (const auto& e : spec.join_edges) {
      bool l_in = std::find(joined.begin(), joined.end(), e.left.table) != joined.end();
      bool r_in = std::find(joined.begin(), joined.end(), e.right.table) != joined.end();
      if (e.right.table == next.schema.columns[0].table && l_in) {
        pairs.emplace_back(schema.index_of(e.left), next.schema.index_of(e.right));
      } else if (e.left.table == next.schema.columns[0].table && r_in) {
        pairs.emplace_back(schema.index_of(e.right), next.schema.index_of(e.left));
      }
    }
    std::unordered_multimap<Row, std::size_t, RowKeyHash> index;
    for (std::size_t j = 0; j < next.rows.size(); ++j) {
      Row key;
      for (auto& p : pairs) key.push_back(next.rows[j][p.second]);
      index.emplace(key, j);
    }
    std::vector<Row> out;
    for (const auto& row : rows) {
      Row key;
      bool has_null = false;
      for (auto& p : pairs) {
        key.push_back(row[p.first]);
        has_null |= row[p.first].is_null();
      }
      if (has_null) continue;
      auto [lo, hi] = index.equal_range(key);
      std::vector<std::size_t> matches;
      for (auto it = lo; it != hi; ++it) matches.push_back(it->second);
      std::sort(matches.begin(), matches.end());
      for (auto j : matches) {
        Row r = row;
        r.insert(r.end(), next.rows[j].begin(), next.rows[j].end());
        out.push_back(std::move(r));
      }
    }
    for (std::size_t i = 0; i < next.schema.size(); ++i) schema.add(next.schema.columns[i], next.schema.types[i]);
    rows = std::move(out);
    joined.push_back(spec.base_relations[t]);
  }

  std::vector<Row> filtered;
  for (auto& row : rows) {
    if (eval_predicate(spec.predicate, row, schema)) filtered.push_back(std::move(row));
  }

  Relation result;
  if (spec.grouping) {
    std::vector<std::size_t> key_idx;
    for (const auto& k : spec.grouping->keys) key_idx.push_back(schema.index_of(k));
    struct Group {
      Row first_row;
      std::vector<Accumulator> accs;
    };
    std::vector<Group> groups;
    std::unordered_map<Row, std::size_t, RowKeyHash> index;
    auto new_group = [&](Row first) {
      Group g{std::move(first), {}};
      for (const auto& p : spec.projections) {
        g.accs.emplace_back(p.is_aggregate ? p.agg.func : ir::AggFunc::Count);
      }
      groups.push_back(std::move(g));
    };
    if (key_idx.empty()) new_group(Row(schema.size()));
    for (const auto& row : filtered) {
      Row key;
      for (auto k : key_idx) key.push_back(row[k]);
      std::size_t gi = 0;
      if (!key_idx.empty()) {
        auto [it, fresh] = index.emplace(key, groups.size());
        if (fresh) new_group(row);
        gi = it->second;
      }
      for (std::size_t p = 0; p < spec.projections.size(); ++p) {
        const auto& item = spec.projections[p];
        if (!item.is_aggregate) continue;
        groups[gi].accs[p].add(item.agg.arg ? eval_scalar(*item.agg.arg, row, schema) : Value(true));
      }
    }
    for (const auto& p : spec.projections) {
      result.schema.add({"", p.output_name()},
                        p.is_aggregate ? aggregate_type(p.agg, schema) : scalar_type(p.expr, schema));
    }
    for (const auto& g : groups) {
      Row out;
      for (std::size_t p = 0; p < spec.projections.size(); ++p) {
        const auto& item = spec.projections[p];
        out.push_back(item.is_aggregate ? g.accs[p].result() : eval_scalar(item.expr, g.first_row, schema));
      }
      result.rows.push_back(std::move(out));
    }
  } else {
    for (const auto& p : spec.projections) result.schema.add({"", p.output_name()}, scalar_type(p.expr, schema));
    for (const auto& row : filtered) {
      Row out;
      for (const auto& p : spec.projections) out.push_back(eval_scalar(p.expr, row, schema));
      result.rows.push_back(std::move(out));
    }
  }

  if (!spec.ordering.empty()) {
    std::stable_sort(result.rows.begin(), result.rows.end(), [&](const Row& a, const Row& b) {
      for (const auto& k : spec.ordering) {
        int c = compare(a[k.output_index], b[k.output_index]);
        if (c != 0) return k.descending ? c > 0 : c < 0;
      }
      return false;
    });
  }
  if (spec.limit && result.rows.size() > *spec.limit) result.rows.resize(*spec.limit);
  return result;
}

std::optional<Row> empty_group_row(const ir::QuerySpec& spec) {
  if (!spec.grouping || !spec.grouping->keys.empty()) return std::nullopt;
  Row row;
  for (const auto& p : spec.projections) {
    row.push_back(p.is_aggregate && p.agg.func == ir::AggFunc::Count ? Value(std::int64_t{0}) : Value());
  }
  return row;
}

}  // namespace qshare::dq
