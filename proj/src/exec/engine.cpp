#include "qshare/exec/engine.hpp"

#include <algorithm>
#include <mutex>
#include <numeric>
#include <unordered_map>

#include "qshare/core/error.hpp"
#include "qshare/dq/operators.hpp"

namespace qshare::exec {

using sql::Expr;
using sql::ExprKind;
using sql::SelectStmt;

std::optional<std::size_t> ResultTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  return std::nullopt;
}

std::vector<LogicalType> infer_types(const std::vector<Row>& rows, std::size_t width) {
  std::vector<LogicalType> out(width, LogicalType::Int);
  for (std::size_t c = 0; c < width; ++c) {
    for (const auto& r : rows) {
      const Value& v = r[c];
      if (v.is_null()) continue;
      if (v.is_bool()) out[c] = LogicalType::Bool;
      else if (v.is_double()) out[c] = LogicalType::Double;
      else if (v.is_string()) out[c] = LogicalType::String;
      else if (v.is_array()) out[c] = LogicalType::IntArray;
      break;
    }
  }
  return out;
}

namespace {

struct Binding {
  std::string qualifier;
  std::string name;
};

struct Frame {
  std::vector<Binding> cols;
  std::vector<Row> rows;
};

[[noreturn]] void unsupported(const std::string& what) { throw UnsupportedError(what); }

std::optional<bool> truth(const Value& v) {
  if (v.is_null()) return std::nullopt;
  if (v.is_bool()) return v.as_bool();
  if (v.is_int()) return v.as_int() != 0;
  throw TypeError("non-boolean condition " + v.to_sql());
}

bool is_aggregate_name(const std::string& name) {
  return name == "COUNT" || name == "SUM" || name == "MIN" || name == "MAX" || name == "AVG";
}

bool contains_aggregate(const Expr& e) {
  if (e.kind == ExprKind::Call && !e.is_window && is_aggregate_name(e.name)) return true;
  for (const auto& a : e.args) {
    if (contains_aggregate(*a)) return true;
  }
  return false;
}

void collect_windows(const Expr& e, std::vector<const Expr*>& out) {
  if (e.kind == ExprKind::Call && e.is_window) {
    out.push_back(&e);
    return;
  }
  for (const auto& a : e.args) collect_windows(*a, out);
}

/// Column lookup over a frame's bindings, memoized per expression node.
class Scope {
 public:
  explicit Scope(const std::vector<Binding>& cols) : cols_(cols) {}

  std::optional<std::size_t> find(const std::string& qualifier, const std::string& name) const {
    std::optional<std::size_t> hit;
    for (std::size_t i = 0; i < cols_.size(); ++i) {
      if (cols_[i].name != name) continue;
      if (!qualifier.empty() && cols_[i].qualifier != qualifier) continue;
      if (hit) throw CatalogError("ambiguous column '" + (qualifier.empty() ? name : qualifier + "." + name) + "'");
      hit = i;
    }
    return hit;
  }

  std::size_t resolve(const Expr& e) const {
    auto it = cache_.find(&e);
    if (it != cache_.end()) return it->second;
    auto i = find(e.qualifier, e.name);
    if (!i) throw CatalogError("unknown column '" + (e.qualifier.empty() ? e.name : e.qualifier + "." + e.name) + "'");
    cache_.emplace(&e, *i);
    return *i;
  }

  const std::vector<Binding>& cols() const { return cols_; }

 private:
  const std::vector<Binding>& cols_;
  mutable std::unordered_map<const Expr*, std::size_t> cache_;
};

using WindowValues = std::unordered_map<const Expr*, std::vector<Value>>;

struct Context {
  const Scope* scope = nullptr;
  const Row* row = nullptr;
  std::size_t row_index = 0;
  const std::vector<const Row*>* group = nullptr;  // set while evaluating aggregated items
  const WindowValues* windows = nullptr;
};

Value eval(const Expr& e, const Context& ctx);

std::int64_t int_arg(const Value& v, const char* fn) {
  if (!v.is_int()) throw TypeError(std::string(fn) + " expects an integer, got " + v.to_sql());
  return v.as_int();
}

Value aggregate(const Expr& e, const Context& ctx) {
  static const std::map<std::string, ir::AggFunc> funcs = {{"COUNT", ir::AggFunc::Count},
                                                           {"SUM", ir::AggFunc::Sum},
                                                           {"MIN", ir::AggFunc::Min},
                                                           {"MAX", ir::AggFunc::Max},
                                                           {"AVG", ir::AggFunc::Avg}};
  if (!ctx.group) throw UnsupportedError("aggregate " + e.name + " outside an aggregating query");
  if (e.star_arg && e.name != "COUNT") unsupported(e.name + "(*)");
  if (!e.star_arg && e.args.size() != 1) throw SyntaxError(e.name + " takes one argument", 0);
  dq::Accumulator acc(funcs.at(e.name));
  for (const Row* r : *ctx.group) {
    if (e.star_arg) {
      acc.add(Value(std::int64_t{1}));
      continue;
    }
    Context inner{ctx.scope, r, 0, nullptr, nullptr};
    acc.add(eval(*e.args[0], inner));
  }
  return acc.result();
}

Value call(const Expr& e, const Context& ctx) {
  if (e.is_window) {
    if (!ctx.windows) unsupported("window function in this position");
    auto it = ctx.windows->find(&e);
    if (it == ctx.windows->end()) unsupported("window function in this position");
    return it->second[ctx.row_index];
  }
  if (is_aggregate_name(e.name)) return aggregate(e, ctx);
  std::vector<Value> a;
  for (const auto& arg : e.args) a.push_back(eval(*arg, ctx));
  auto want = [&](std::size_t n) {
    if (a.size() != n) throw SyntaxError(e.name + " takes " + std::to_string(n) + " arguments", 0);
  };
  const std::string& f = e.name;
  if (f == "CARDINALITY") {
    want(1);
    if (a[0].is_null()) return Value();
    return Value(static_cast<std::int64_t>(a[0].as_array().size()));
  }
  if (f == "ARRAY_REMOVE") {
    want(2);
    if (a[0].is_null()) return Value();
    IntArray out;
    for (auto x : a[0].as_array()) {
      if (a[1].is_null() || x != int_arg(a[1], "ARRAY_REMOVE")) out.push_back(x);
    }
    return Value(std::move(out));
  }
  if (f == "ARRAY_INTERSECT") {
    want(2);
    if (a[0].is_null() || a[1].is_null()) return Value();
    IntArray out;
    const auto& r = a[1].as_array();
    for (auto x : a[0].as_array()) {
      if (std::find(r.begin(), r.end(), x) != r.end() && std::find(out.begin(), out.end(), x) == out.end()) {
        out.push_back(x);
      }
    }
    return Value(std::move(out));
  }
  if (f == "CONTAINS") {
    want(2);
    if (a[0].is_null() || a[1].is_null()) return Value();
    const auto& arr = a[0].as_array();
    return Value(std::find(arr.begin(), arr.end(), int_arg(a[1], "CONTAINS")) != arr.end());
  }
  if (f == "SEQUENCE") {
    want(2);
    if (a[0].is_null() || a[1].is_null()) return Value();
    IntArray out;
    for (auto x = int_arg(a[0], "SEQUENCE"); x <= int_arg(a[1], "SEQUENCE"); ++x) out.push_back(x);
    return Value(std::move(out));
  }
  if (f == "BITWISE_AND") {
    want(2);
    if (a[0].is_null() || a[1].is_null()) return Value();
    return Value(int_arg(a[0], "BITWISE_AND") & int_arg(a[1], "BITWISE_AND"));
  }
  if (f == "BIT_COUNT") {
    want(1);
    if (a[0].is_null()) return Value();
    return Value(static_cast<std::int64_t>(__builtin_popcountll(static_cast<std::uint64_t>(int_arg(a[0], f.c_str())))));
  }
  unsupported("function " + f);
}

Value binary(const Expr& e, const Context& ctx) {
  const std::string& op = e.op;
  if (op == "AND" || op == "OR") {
    auto l = truth(eval(*e.args[0], ctx));
    bool is_and = op == "AND";
    if (l && *l != is_and) return Value(!is_and);
    auto r = truth(eval(*e.args[1], ctx));
    if (r && *r != is_and) return Value(!is_and);
    if (!l || !r) return Value();
    return Value(is_and);
  }
  Value l = eval(*e.args[0], ctx);
  Value r = eval(*e.args[1], ctx);
  if (op == "+" || op == "-" || op == "*" || op == "/") return dq::arithmetic(op[0], l, r);
  if (op == "|" || op == "&" || op == "<<") {
    if (l.is_null() || r.is_null()) return Value();
    auto a = static_cast<std::uint64_t>(int_arg(l, op.c_str()));
    auto b = static_cast<std::uint64_t>(int_arg(r, op.c_str()));
    std::uint64_t v = op == "|" ? (a | b) : op == "&" ? (a & b) : (b >= 64 ? 0 : a << b);
    return Value(static_cast<std::int64_t>(v));
  }
  auto c = sql_compare(l, r);
  if (!c) return Value();
  if (op == "=") return Value(*c == 0);
  if (op == "<>" || op == "!=") return Value(*c != 0);
  if (op == "<") return Value(*c < 0);
  if (op == "<=") return Value(*c <= 0);
  if (op == ">") return Value(*c > 0);
  if (op == ">=") return Value(*c >= 0);
  unsupported("operator " + op);
}

Value eval(const Expr& e, const Context& ctx) {
  switch (e.kind) {
    case ExprKind::Literal: return e.literal;
    case ExprKind::Param: unsupported("unbound parameter");
    case ExprKind::Column: {
      std::size_t i = ctx.scope->resolve(e);
      if (ctx.group) return ctx.group->empty() ? Value() : (*ctx.group->front())[i];
      return (*ctx.row)[i];
    }
    case ExprKind::Star: unsupported("* in an expression");
    case ExprKind::Unary: {
      Value v = eval(*e.args[0], ctx);
      if (e.op == "NOT") {
        auto t = truth(v);
        return t ? Value(!*t) : Value();
      }
      if (v.is_null()) return Value();
      if (v.is_int()) return Value(static_cast<std::int64_t>(0 - static_cast<std::uint64_t>(v.as_int())));
      if (v.is_double()) return Value(-v.as_double());
      throw TypeError("negation of " + v.to_sql());
    }
    case ExprKind::Binary: return binary(e, ctx);
    case ExprKind::Between: {
      Value x = eval(*e.args[0], ctx);
      auto lo = sql_compare(x, eval(*e.args[1], ctx));
      auto hi = sql_compare(x, eval(*e.args[2], ctx));
      if (!lo || !hi) return Value();
      bool in = *lo >= 0 && *hi <= 0;
      return Value(in != e.negated);
    }
    case ExprKind::Like: {
      Value x = eval(*e.args[0], ctx);
      Value p = eval(*e.args[1], ctx);
      if (x.is_null() || p.is_null()) return Value();
      if (!x.is_string() || !p.is_string()) throw TypeError("LIKE on non-string values");
      return Value(like_match(x.as_string(), p.as_string()) != e.negated);
    }
    case ExprKind::In: {
      Value x = eval(*e.args[0], ctx);
      if (x.is_null()) return Value();
      bool unknown = false;
      for (std::size_t i = 1; i < e.args.size(); ++i) {
        auto c = sql_compare(x, eval(*e.args[i], ctx));
        if (!c) {
          unknown = true;
        } else if (*c == 0) {
          return Value(!e.negated);
        }
      }
      if (unknown) return Value();
      return Value(e.negated);
    }
    case ExprKind::IsNull: return Value(eval(*e.args[0], ctx).is_null() != e.negated);
    case ExprKind::Case: {
      std::size_t pairs = (e.args.size() - (e.has_else ? 1 : 0)) / 2;
      for (std::size_t i = 0; i < pairs; ++i) {
        auto t = truth(eval(*e.args[2 * i], ctx));
        if (t && *t) return eval(*e.args[2 * i + 1], ctx);
      }
      return e.has_else ? eval(*e.args.back(), ctx) : Value();
    }
    case ExprKind::Call: return call(e, ctx);
    case ExprKind::Array: {
      IntArray out;
      for (const auto& a : e.args) {
        Value v = eval(*a, ctx);
        if (v.is_null()) unsupported("NULL array element");
        out.push_back(int_arg(v, "ARRAY"));
      }
      return Value(std::move(out));
    }
  }
  return Value();
}

/// Splits a condition into its top-level AND terms.
void conjuncts(const sql::ExprPtr& e, std::vector<sql::ExprPtr>& out) {
  if (e->kind == ExprKind::Binary && e->op == "AND") {
    conjuncts(e->args[0], out);
    conjuncts(e->args[1], out);
    return;
  }
  out.push_back(e);
}

/// Hash keys treat integral doubles like ints so that 1 and 1.0 meet.
Value key_value(const Value& v) {
  if (v.is_double() && v.as_double() == static_cast<double>(static_cast<std::int64_t>(v.as_double()))) {
    return Value(static_cast<std::int64_t>(v.as_double()));
  }
  return v;
}

class Executor {
 public:
  explicit Executor(const std::map<std::string, ResultTable>& tables) : tables_(tables) {}

  ResultTable run(const SelectStmt& stmt) {
    std::vector<std::string> shadowed;
    for (const auto& cte : stmt.with) {
      if (ctes_.count(cte.name)) throw CatalogError("duplicate CTE '" + cte.name + "'");
      auto result = run(*cte.query);
      ctes_.emplace(cte.name, std::move(result));
      shadowed.push_back(cte.name);
    }
    auto out = select(stmt);
    for (const auto& name : shadowed) ctes_.erase(name);
    return out;
  }

 private:
  const ResultTable& lookup(const std::string& name) {
    auto c = ctes_.find(name);
    if (c != ctes_.end()) return c->second;
    auto t = tables_.find(name);
    if (t != tables_.end()) return t->second;
    throw CatalogError("unknown table '" + name + "'");
  }

  Frame load(const sql::TableRef& ref) {
    if (ref.kind == sql::TableRef::Kind::Unnest) unsupported("UNNEST as the first FROM item");
    const ResultTable& t = lookup(ref.name);
    Frame f;
    std::string q = ref.alias.empty() ? ref.name : ref.alias;
    for (const auto& c : t.columns) f.cols.push_back({q, c});
    f.rows = t.rows;
    return f;
  }

  Frame unnest(Frame left, const sql::JoinClause& j) {
    if (j.right.unnest_column.empty()) unsupported("UNNEST without a column alias");
    Frame out;
    out.cols = left.cols;
    out.cols.push_back({j.right.alias, j.right.unnest_column});
    Scope scope(left.cols);
    for (auto& row : left.rows) {
      Value arr = eval(*j.right.unnest_arg, Context{&scope, &row});
      if (arr.is_null()) continue;
      if (!arr.is_array()) throw TypeError("UNNEST over a non-array value");
      for (auto x : arr.as_array()) {
        Row r = row;
        r.push_back(Value(x));
        out.rows.push_back(std::move(r));
      }
    }
    if (j.on) return filter(std::move(out), *j.on);
    return out;
  }

  Frame filter(Frame f, const Expr& cond) {
    Scope scope(f.cols);
    std::vector<Row> kept;
    for (auto& r : f.rows) {
      auto t = truth(eval(cond, Context{&scope, &r}));
      if (t && *t) kept.push_back(std::move(r));
    }
    f.rows = std::move(kept);
    return f;
  }

  Frame join(Frame left, const sql::JoinClause& j) {
    if (j.right.kind == sql::TableRef::Kind::Unnest) return unnest(std::move(left), j);
    Frame right = load(j.right);
    Frame out;
    out.cols = left.cols;
    out.cols.insert(out.cols.end(), right.cols.begin(), right.cols.end());

    std::vector<std::pair<std::size_t, std::size_t>> keys;
    std::vector<sql::ExprPtr> residual;
    if (j.on) {
      std::vector<sql::ExprPtr> terms;
      conjuncts(j.on, terms);
      Scope ls(left.cols), rs(right.cols);
      for (const auto& t : terms) {
        if (t->kind == ExprKind::Binary && t->op == "=" && t->args[0]->kind == ExprKind::Column &&
            t->args[1]->kind == ExprKind::Column) {
          const Expr& a = *t->args[0];
          const Expr& b = *t->args[1];
          auto la = ls.find(a.qualifier, a.name), rb = rs.find(b.qualifier, b.name);
          auto lb = ls.find(b.qualifier, b.name), ra = rs.find(a.qualifier, a.name);
          if (la && rb && !ra && !lb) {
            keys.emplace_back(*la, *rb);
            continue;
          }
          if (lb && ra && !la && !rb) {
            keys.emplace_back(*lb, *ra);
            continue;
          }
        }
        residual.push_back(t);
      }
    }

    auto emit = [&](const Row& l, const Row& r) {
      Row row = l;
      row.insert(row.end(), r.begin(), r.end());
      out.rows.push_back(std::move(row));
    };
    if (keys.empty()) {
      for (const auto& l : left.rows) {
        for (const auto& r : right.rows) emit(l, r);
      }
    } else {
      std::unordered_map<Row, std::vector<std::size_t>, RowHash> index;
      for (std::size_t i = 0; i < right.rows.size(); ++i) {
        Row k;
        bool null = false;
        for (const auto& [li, ri] : keys) {
          null = null || right.rows[i][ri].is_null();
          k.push_back(key_value(right.rows[i][ri]));
        }
        if (!null) index[std::move(k)].push_back(i);
      }
      for (const auto& l : left.rows) {
        Row k;
        bool null = false;
        for (const auto& [li, ri] : keys) {
          null = null || l[li].is_null();
          k.push_back(key_value(l[li]));
        }
        if (null) continue;
        auto it = index.find(k);
        if (it == index.end()) continue;
        for (auto i : it->second) emit(l, right.rows[i]);
      }
    }
    for (const auto& t : residual) out = filter(std::move(out), *t);
    return out;
  }

  Frame from_clause(const SelectStmt& stmt) {
    if (!stmt.from) {
      Frame f;
      f.rows.push_back({});
      return f;
    }
    Frame f = load(*stmt.from);
    for (const auto& j : stmt.joins) f = join(std::move(f), j);
    return f;
  }

  WindowValues windows(const std::vector<const Expr*>& exprs, const Frame& f, const Scope& scope) {
    WindowValues out;
    for (const Expr* w : exprs) {
      if (w->name != "ROW_NUMBER") unsupported("window function " + w->name);
      std::vector<Row> part(f.rows.size()), order(f.rows.size());
      for (std::size_t i = 0; i < f.rows.size(); ++i) {
        Context ctx{&scope, &f.rows[i]};
        for (const auto& p : w->partition_by) part[i].push_back(eval(*p, ctx));
        for (const auto& o : w->window_order) order[i].push_back(eval(*o.expr, ctx));
      }
      std::vector<std::size_t> idx(f.rows.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        for (std::size_t k = 0; k < part[a].size(); ++k) {
          int c = compare(part[a][k], part[b][k]);
          if (c) return c < 0;
        }
        for (std::size_t k = 0; k < order[a].size(); ++k) {
          int c = compare(order[a][k], order[b][k]);
          if (c) return w->window_order[k].descending ? c > 0 : c < 0;
        }
        return false;
      });
      std::vector<Value> numbers(f.rows.size());
      std::int64_t n = 0;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        if (i == 0 || part[idx[i]] != part[idx[i - 1]]) n = 0;
        numbers[idx[i]] = Value(++n);
      }
      out.emplace(w, std::move(numbers));
    }
    return out;
  }

  ResultTable select(const SelectStmt& stmt) {
    Frame f = from_clause(stmt);
    if (stmt.where) f = filter(std::move(f), *stmt.where);
    Scope scope(f.cols);

    // Output columns, with stars expanded.
    struct Item {
      const Expr* expr = nullptr;
      std::size_t column = 0;  // when expr is null: a star-expanded input column
    };
    std::vector<Item> items;
    ResultTable out;
    for (const auto& si : stmt.items) {
      if (si.expr->kind == ExprKind::Star) {
        bool any = false;
        for (std::size_t i = 0; i < f.cols.size(); ++i) {
          if (!si.expr->qualifier.empty() && f.cols[i].qualifier != si.expr->qualifier) continue;
          items.push_back({nullptr, i});
          out.columns.push_back(f.cols[i].name);
          any = true;
        }
        if (!any && !si.expr->qualifier.empty()) throw CatalogError("unknown table '" + si.expr->qualifier + "'");
        continue;
      }
      items.push_back({si.expr.get(), 0});
      if (!si.alias.empty()) {
        out.columns.push_back(si.alias);
      } else if (si.expr->kind == ExprKind::Column) {
        out.columns.push_back(si.expr->name);
      } else {
        out.columns.push_back("_col" + std::to_string(out.columns.size()));
      }
    }

    bool aggregated = !stmt.group_by.empty();
    std::vector<const Expr*> window_exprs;
    for (const auto& it : items) {
      if (!it.expr) continue;
      aggregated = aggregated || contains_aggregate(*it.expr);
      collect_windows(*it.expr, window_exprs);
    }
    if (aggregated && !window_exprs.empty()) unsupported("window function in an aggregating query");

    // Each output row remembers its source for ORDER BY on input expressions.
    std::vector<std::size_t> source_row;
    std::vector<std::vector<const Row*>> groups;
    if (aggregated) {
      std::unordered_map<Row, std::size_t, RowHash> index;
      for (const auto& r : f.rows) {
        Row key;
        Context ctx{&scope, &r};
        for (const auto& g : stmt.group_by) key.push_back(eval(*g, ctx));
        auto [it, fresh] = index.emplace(std::move(key), groups.size());
        if (fresh) groups.emplace_back();
        groups[it->second].push_back(&r);
      }
      if (stmt.group_by.empty() && groups.empty()) groups.emplace_back();
      for (std::size_t g = 0; g < groups.size(); ++g) {
        Context ctx{&scope, nullptr, 0, &groups[g], nullptr};
        Row row;
        for (const auto& it : items) {
          if (!it.expr) {
            row.push_back(groups[g].empty() ? Value() : (*groups[g].front())[it.column]);
          } else {
            row.push_back(eval(*it.expr, ctx));
          }
        }
        out.rows.push_back(std::move(row));
        source_row.push_back(g);
      }
    } else {
      auto win = windows(window_exprs, f, scope);
      for (std::size_t i = 0; i < f.rows.size(); ++i) {
        Context ctx{&scope, &f.rows[i], i, nullptr, &win};
        Row row;
        for (const auto& it : items) row.push_back(it.expr ? eval(*it.expr, ctx) : f.rows[i][it.column]);
        out.rows.push_back(std::move(row));
        source_row.push_back(i);
      }
    }

    if (!stmt.order_by.empty()) {
      std::vector<Binding> out_cols;
      for (const auto& c : out.columns) out_cols.push_back({"", c});
      Scope out_scope(out_cols);
      std::vector<Row> keys(out.rows.size());
      for (std::size_t i = 0; i < out.rows.size(); ++i) {
        for (const auto& o : stmt.order_by) {
          const Expr& e = *o.expr;
          if (e.kind == ExprKind::Literal && e.literal.is_int()) {
            auto k = e.literal.as_int();
            if (k < 1 || static_cast<std::size_t>(k) > out.columns.size()) {
              throw CatalogError("ORDER BY position " + std::to_string(k) + " is out of range");
            }
            keys[i].push_back(out.rows[i][k - 1]);
            continue;
          }
          if (e.kind == ExprKind::Column && e.qualifier.empty()) {
            if (auto c = out_scope.find("", e.name)) {
              keys[i].push_back(out.rows[i][*c]);
              continue;
            }
          }
          if (aggregated) {
            keys[i].push_back(eval(e, Context{&scope, nullptr, 0, &groups[source_row[i]], nullptr}));
          } else {
            keys[i].push_back(eval(e, Context{&scope, &f.rows[source_row[i]]}));
          }
        }
      }
      std::vector<std::size_t> idx(out.rows.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        for (std::size_t k = 0; k < stmt.order_by.size(); ++k) {
          int c = compare(keys[a][k], keys[b][k]);
          if (c) return stmt.order_by[k].descending ? c > 0 : c < 0;
        }
        return false;
      });
      std::vector<Row> sorted;
      sorted.reserve(idx.size());
      for (auto i : idx) sorted.push_back(std::move(out.rows[i]));
      out.rows = std::move(sorted);
    }
    if (stmt.limit && out.rows.size() > static_cast<std::size_t>(*stmt.limit)) {
      out.rows.resize(static_cast<std::size_t>(std::max<std::int64_t>(*stmt.limit, 0)));
    }
    out.types = infer_types(out.rows, out.columns.size());
    return out;
  }

  const std::map<std::string, ResultTable>& tables_;
  std::map<std::string, ResultTable> ctes_;
};

}  // namespace

ReferenceEngine::ReferenceEngine(const ReferenceEngine& other) {
  std::shared_lock lock(other.mutex_);
  tables_ = other.tables_;
}

void ReferenceEngine::add_database(const dq::Database& db) {
  for (const auto& [name, rel] : db.tables) {
    ResultTable t;
    for (const auto& c : rel.schema.columns) t.columns.push_back(c.column);
    t.types = rel.schema.types;
    t.rows = rel.rows;
    add_table(name, std::move(t));
  }
}

void ReferenceEngine::add_table(const std::string& name, ResultTable table) {
  std::unique_lock lock(mutex_);
  tables_[name] = std::move(table);
}

void ReferenceEngine::drop_table(const std::string& name) {
  std::unique_lock lock(mutex_);
  if (!tables_.erase(name)) throw CatalogError("unknown table '" + name + "'");
}

bool ReferenceEngine::has_table(const std::string& name) const {
  std::shared_lock lock(mutex_);
  return tables_.count(name) > 0;
}

std::vector<std::string> ReferenceEngine::table_names() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [name, t] : tables_) out.push_back(name);
  return out;
}

ResultTable ReferenceEngine::execute(const std::string& sql) const { return execute(sql::parse_select(sql)); }

ResultTable ReferenceEngine::execute(const SelectStmt& stmt) const {
  std::shared_lock lock(mutex_);
  return Executor(tables_).run(stmt);
}

}  // namespace qshare::exec
