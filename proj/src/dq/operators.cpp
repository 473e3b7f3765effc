#include "qshare/dq/operators.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "qshare/core/error.hpp"

namespace qshare::dq {

using ir::AggFunc;
using ir::CompareOp;
using ir::ScalarExpr;

bool eval_atom(const ir::Atom& atom, const Row& row, const Schema& schema) {
  const Value& v = row[schema.index_of(atom.column)];
  if (v.is_null()) return false;
  auto cmp = [&](const ir::Constant& c) { return sql_compare(v, c.value); };
  for (const auto& c : atom.operands) {
    if (c.is_param()) throw PlanError("unbound placeholder in predicate on " + atom.column.qualified());
  }
  switch (atom.op) {
    case CompareOp::Eq: { auto r = cmp(atom.operands[0]); return r && *r == 0; }
    case CompareOp::Ne: { auto r = cmp(atom.operands[0]); return r && *r != 0; }
    case CompareOp::Lt: { auto r = cmp(atom.operands[0]); return r && *r < 0; }
    case CompareOp::Le: { auto r = cmp(atom.operands[0]); return r && *r <= 0; }
    case CompareOp::Gt: { auto r = cmp(atom.operands[0]); return r && *r > 0; }
    case CompareOp::Ge: { auto r = cmp(atom.operands[0]); return r && *r >= 0; }
    case CompareOp::Between: {
      auto lo = cmp(atom.operands[0]);
      auto hi = cmp(atom.operands[1]);
      return lo && hi && *lo >= 0 && *hi <= 0;
    }
    case CompareOp::Like:
      return v.is_string() && atom.operands[0].value.is_string() &&
             like_match(v.as_string(), atom.operands[0].value.as_string());
    case CompareOp::In:
      return std::any_of(atom.operands.begin(), atom.operands.end(), [&](const ir::Constant& c) {
        auto r = cmp(c);
        return r && *r == 0;
      });
  }
  return false;
}

bool eval_predicate(const ir::PredicateNF& pred, const Row& row, const Schema& schema) {
  for (const auto& conj : pred.disjuncts) {
    bool ok = true;
    for (const auto& atom : conj.atoms) {
      if (!eval_atom(atom, row, schema)) {
        ok = false;
        break;
      }
    }
    if (ok) return true;
  }
  return false;
}

Value arithmetic(char op, const Value& lhs, const Value& rhs) {
  if (lhs.is_null() || rhs.is_null()) return Value();
  if (!lhs.is_numeric() || !rhs.is_numeric()) {
    throw TypeError("arithmetic on non-numeric values " + lhs.to_sql() + " and " + rhs.to_sql());
  }
  if (op == '/') {
    double d = rhs.numeric();
    if (d == 0) return Value();
    return Value(lhs.numeric() / d);
  }
  if (lhs.is_int() && rhs.is_int()) {
    auto a = static_cast<std::uint64_t>(lhs.as_int());
    auto b = static_cast<std::uint64_t>(rhs.as_int());
    std::uint64_t r = op == '+' ? a + b : op == '-' ? a - b : a * b;
    return Value(static_cast<std::int64_t>(r));
  }
  double a = lhs.numeric();
  double b = rhs.numeric();
  switch (op) {
    case '+': return Value(a + b);
    case '-': return Value(a - b);
    case '*': return Value(a * b);
    default: break;
  }
  throw PlanError(std::string("unknown arithmetic operator ") + op);
}

Value eval_scalar(const ScalarExpr& expr, const Row& row, const Schema& schema) {
  switch (expr.kind) {
    case ScalarExpr::Kind::Column: return row[schema.index_of(expr.column)];
    case ScalarExpr::Kind::Literal: return expr.literal;
    case ScalarExpr::Kind::Binary:
      return arithmetic(expr.op, eval_scalar(expr.args[0], row, schema),
                        eval_scalar(expr.args[1], row, schema));
    case ScalarExpr::Kind::Negate: {
      Value v = eval_scalar(expr.args[0], row, schema);
      if (v.is_null()) return v;
      if (v.is_int()) return Value(static_cast<std::int64_t>(0 - static_cast<std::uint64_t>(v.as_int())));
      if (v.is_double()) return Value(-v.as_double());
      throw TypeError("negation of non-numeric value " + v.to_sql());
    }
  }
  return Value();
}

LogicalType scalar_type(const ScalarExpr& expr, const Schema& schema) {
  switch (expr.kind) {
    case ScalarExpr::Kind::Column: return schema.types[schema.index_of(expr.column)];
    case ScalarExpr::Kind::Literal: return expr.literal.is_int() ? LogicalType::Int : LogicalType::Double;
    case ScalarExpr::Kind::Binary: {
      if (expr.op == '/') return LogicalType::Double;
      auto a = scalar_type(expr.args[0], schema);
      auto b = scalar_type(expr.args[1], schema);
      if (!is_numeric(a) || !is_numeric(b)) throw TypeError("arithmetic on non-numeric column");
      return a == LogicalType::Int && b == LogicalType::Int ? LogicalType::Int : LogicalType::Double;
    }
    case ScalarExpr::Kind::Negate: {
      auto a = scalar_type(expr.args[0], schema);
      if (!is_numeric(a)) throw TypeError("negation of non-numeric column");
      return a;
    }
  }
  return LogicalType::Int;
}

LogicalType aggregate_type(const ir::Aggregate& agg, const Schema& schema) {
  switch (agg.func) {
    case AggFunc::Count: return LogicalType::Int;
    case AggFunc::Avg: return LogicalType::Double;
    case AggFunc::Sum: {
      auto t = scalar_type(*agg.arg, schema);
      if (!is_numeric(t)) throw TypeError("SUM over non-numeric expression");
      return t;
    }
    case AggFunc::Min:
    case AggFunc::Max: return scalar_type(*agg.arg, schema);
  }
  return LogicalType::Int;
}

void Accumulator::add(const Value& v) {
  if (v.is_null()) return;
  ++count_;
  switch (func_) {
    case AggFunc::Count: break;
    case AggFunc::Sum:
    case AggFunc::Avg:
      if (!v.is_numeric()) throw TypeError("SUM/AVG over non-numeric value " + v.to_sql());
      if (v.is_int() && !any_double_) {
        int_sum_ = static_cast<std::int64_t>(static_cast<std::uint64_t>(int_sum_) +
                                             static_cast<std::uint64_t>(v.as_int()));
      } else {
        if (!any_double_) {
          double_sum_ = static_cast<double>(int_sum_);
          any_double_ = true;
        }
        double_sum_ += v.numeric();
      }
      break;
    case AggFunc::Min:
      if (best_.is_null() || compare(v, best_) < 0) best_ = v;
      break;
    case AggFunc::Max:
      if (best_.is_null() || compare(v, best_) > 0) best_ = v;
      break;
  }
}

Value Accumulator::result() const {
  switch (func_) {
    case AggFunc::Count: return Value(count_);
    case AggFunc::Sum:
      if (count_ == 0) return Value();
      return any_double_ ? Value(double_sum_) : Value(int_sum_);
    case AggFunc::Avg:
      if (count_ == 0) return Value();
      return Value((any_double_ ? double_sum_ : static_cast<double>(int_sum_)) /
                   static_cast<double>(count_));
    case AggFunc::Min:
    case AggFunc::Max: return best_;
  }
  return Value();
}

AnnotatedRelation shared_scan(const Relation& table, const QueryPredicates& preds, SetEncoding encoding) {
  AnnotatedRelation out;
  out.schema = table.schema;
  out.kind = AnnotationKind::Set;
  for (const auto& row : table.rows) {
    QuerySet set(encoding);
    for (std::size_t q = 0; q < preds.size(); ++q) {
      if (eval_predicate(preds[q], row, table.schema)) set.insert(static_cast<std::uint32_t>(q + 1));
    }
    if (set.empty()) continue;
    out.rows.push_back(row);
    out.annotations.push_back(std::move(set));
  }
  return out;
}

AnnotatedRelation filter_scan(const Relation& table, const ir::PredicateNF& filter) {
  AnnotatedRelation out;
  out.schema = table.schema;
  for (const auto& row : table.rows) {
    if (eval_predicate(filter, row, table.schema)) out.rows.push_back(row);
  }
  return out;
}

AnnotatedRelation shared_select(const AnnotatedRelation& input, const QueryPredicates& preds,
                                SetEncoding encoding) {
  if (input.kind == AnnotationKind::None) {
    Relation plain{input.schema, input.rows};
    return shared_scan(plain, preds, encoding);
  }
  AnnotatedRelation out;
  out.schema = input.schema;
  out.kind = input.kind;
  for (std::size_t i = 0; i < input.rows.size(); ++i) {
    const auto& row = input.rows[i];
    QuerySet kept(input.annotations[i].encoding());
    for (auto q : input.annotations[i].ids()) {
      // queries without a listed predicate keep their rows
      if (q > preds.size() || eval_predicate(preds[q - 1], row, input.schema)) kept.insert(q);
    }
    if (kept.empty()) continue;
    out.rows.push_back(row);
    out.annotations.push_back(std::move(kept));
  }
  return out;
}

namespace {

struct KeyHash {
  std::size_t operator()(const Row& r) const { return RowHash{}(r); }
};

struct KeyEq {
  bool operator()(const Row& a, const Row& b) const { return a == b; }
};

}  // namespace

AnnotatedRelation shared_join(const AnnotatedRelation& left, const AnnotatedRelation& right,
                              const JoinKeys& keys) {
  std::vector<std::size_t> lk, rk;
  for (const auto& [l, r] : keys) {
    lk.push_back(left.schema.index_of(l));
    rk.push_back(right.schema.index_of(r));
  }
  AnnotatedRelation out;
  out.schema = left.schema;
  for (std::size_t i = 0; i < right.schema.size(); ++i) {
    out.schema.add(right.schema.columns[i], right.schema.types[i]);
  }
  using K = AnnotationKind;
  K lkind = left.kind, rkind = right.kind;
  if (lkind == K::None) out.kind = rkind;
  else if (rkind == K::None) out.kind = lkind;
  else if (lkind == K::Set && rkind == K::Set) out.kind = K::Set;
  else out.kind = K::Atomic;

  std::unordered_map<Row, std::vector<std::size_t>, KeyHash, KeyEq> table;
  for (std::size_t j = 0; j < right.rows.size(); ++j) {
    Row key;
    bool has_null = false;
    for (auto k : rk) {
      has_null |= right.rows[j][k].is_null();
      key.push_back(right.rows[j][k]);
    }
    if (!has_null) table[key].push_back(j);
  }
  for (std::size_t i = 0; i < left.rows.size(); ++i) {
    Row key;
    bool has_null = false;
    for (auto k : lk) {
      has_null |= left.rows[i][k].is_null();
      key.push_back(left.rows[i][k]);
    }
    if (has_null) continue;
    auto it = table.find(key);
    if (it == table.end()) continue;
    for (auto j : it->second) {
      std::optional<QuerySet> ann;
      if (lkind == K::None && rkind == K::None) {
      } else if (lkind == K::None) {
        ann = right.annotations[j];
      } else if (rkind == K::None) {
        ann = left.annotations[i];
      } else if (lkind == K::Set && rkind == K::Set) {
        ann = left.annotations[i].intersect(right.annotations[j]);
      } else if (lkind == K::Atomic && rkind == K::Atomic) {
        if (left.annotations[i] == right.annotations[j]) ann = left.annotations[i];
        else ann = QuerySet();
      } else {
        const auto& atomic = lkind == K::Atomic ? left.annotations[i] : right.annotations[j];
        const auto& set = lkind == K::Atomic ? right.annotations[j] : left.annotations[i];
        ann = set.contains(atomic.ids().front()) ? atomic : QuerySet();
      }
      if (ann && ann->empty()) continue;
      Row row = left.rows[i];
      row.insert(row.end(), right.rows[j].begin(), right.rows[j].end());
      out.rows.push_back(std::move(row));
      if (ann) out.annotations.push_back(std::move(*ann));
    }
  }
  return out;
}

AnnotatedRelation unnest_query_set(const AnnotatedRelation& input) {
  if (input.kind == AnnotationKind::None) throw PlanError("unnest requires an annotated input");
  if (input.kind == AnnotationKind::Atomic) return input;
  AnnotatedRelation out;
  out.schema = input.schema;
  out.kind = AnnotationKind::Atomic;
  for (std::size_t i = 0; i < input.rows.size(); ++i) {
    for (auto q : input.annotations[i].ids()) {
      out.rows.push_back(input.rows[i]);
      out.annotations.push_back(QuerySet::of({q}));
    }
  }
  return out;
}

AnnotatedRelation shared_group_by(const AnnotatedRelation& input, const std::vector<ColumnRef>& keys,
                                  const std::vector<NamedAggregate>& aggs) {
  if (input.kind == AnnotationKind::None) throw PlanError("shared grouping requires an annotated input");
  AnnotatedRelation atomic = unnest_query_set(input);
  std::vector<std::size_t> key_idx;
  AnnotatedRelation out;
  out.kind = AnnotationKind::Atomic;
  for (const auto& k : keys) {
    key_idx.push_back(atomic.schema.index_of(k));
    out.schema.add(atomic.schema.columns[key_idx.back()], atomic.schema.types[key_idx.back()]);
  }
  for (const auto& a : aggs) out.schema.add({"", a.name}, aggregate_type(a.agg, atomic.schema));

  struct Group {
    Row key_values;
    std::uint32_t q;
    std::vector<Accumulator> accs;
  };
  std::vector<Group> groups;
  std::unordered_map<Row, std::size_t, KeyHash, KeyEq> index;
  for (std::size_t i = 0; i < atomic.rows.size(); ++i) {
    const auto& row = atomic.rows[i];
    auto q = atomic.annotations[i].ids().front();
    Row key{Value(static_cast<std::int64_t>(q))};
    for (auto k : key_idx) key.push_back(row[k]);
    auto [it, fresh] = index.emplace(key, groups.size());
    if (fresh) {
      Group g;
      for (auto k : key_idx) g.key_values.push_back(row[k]);
      g.q = q;
      for (const auto& a : aggs) g.accs.emplace_back(a.agg.func);
      groups.push_back(std::move(g));
    }
    auto& g = groups[it->second];
    for (std::size_t a = 0; a < aggs.size(); ++a) {
      g.accs[a].add(aggs[a].agg.arg ? eval_scalar(*aggs[a].agg.arg, row, atomic.schema) : Value(true));
    }
  }
  for (auto& g : groups) {
    Row row = g.key_values;
    for (const auto& acc : g.accs) row.push_back(acc.result());
    out.rows.push_back(std::move(row));
    out.annotations.push_back(QuerySet::of({g.q}));
  }
  return out;
}

AnnotatedRelation shared_project(const AnnotatedRelation& input, const std::vector<ProjectItem>& items) {
  AnnotatedRelation out;
  out.kind = input.kind;
  out.annotations = input.annotations;
  for (const auto& item : items) out.schema.add(item.name, scalar_type(item.expr, input.schema));
  out.rows.reserve(input.rows.size());
  for (const auto& row : input.rows) {
    Row r;
    r.reserve(items.size());
    for (const auto& item : items) r.push_back(eval_scalar(item.expr, row, input.schema));
    out.rows.push_back(std::move(r));
  }
  return out;
}

AnnotatedRelation shared_order_limit(const AnnotatedRelation& input, const std::vector<SortKey>& keys,
                                     const std::vector<std::optional<std::uint64_t>>& limits) {
  bool limited = std::any_of(limits.begin(), limits.end(), [](const auto& l) { return l.has_value(); });
  if (limited && input.kind != AnnotationKind::Atomic) {
    throw PlanError("per-query limits require atomic annotations");
  }
  std::vector<std::size_t> key_idx;
  for (const auto& k : keys) key_idx.push_back(input.schema.index_of(k.column));
  std::vector<std::size_t> order(input.rows.size());
  std::iota(order.begin(), order.end(), 0);
  bool atomic = input.kind == AnnotationKind::Atomic;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (atomic) {
      auto qa = input.annotations[a].ids().front();
      auto qb = input.annotations[b].ids().front();
      if (qa != qb) return qa < qb;
    }
    for (std::size_t k = 0; k < keys.size(); ++k) {
      int c = compare(input.rows[a][key_idx[k]], input.rows[b][key_idx[k]]);
      if (c != 0) return keys[k].descending ? c > 0 : c < 0;
    }
    return false;
  });
  AnnotatedRelation out;
  out.schema = input.schema;
  out.kind = input.kind;
  std::unordered_map<std::uint32_t, std::uint64_t> taken;
  for (auto i : order) {
    if (atomic && limited) {
      auto q = input.annotations[i].ids().front();
      if (q <= limits.size() && limits[q - 1] && taken[q] >= *limits[q - 1]) continue;
      ++taken[q];
    }
    out.rows.push_back(input.rows[i]);
    if (input.kind != AnnotationKind::None) out.annotations.push_back(input.annotations[i]);
  }
  return out;
}

Relation demux(const AnnotatedRelation& input, ir::QueryId q, std::size_t batch_size) {
  if (q.value < 1 || q.value > batch_size) {
    throw PlanError("query " + std::to_string(q.value) + " is not in the batch of " +
                    std::to_string(batch_size));
  }
  Relation out;
  out.schema = input.schema;
  for (std::size_t i = 0; i < input.rows.size(); ++i) {
    if (input.kind == AnnotationKind::None || input.annotations[i].contains(q.value)) {
      out.rows.push_back(input.rows[i]);
    }
  }
  return out;
}

}  // namespace qshare::dq
