#include "qshare/plan/shared_plan.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <set>

#include <json.hpp>

#include "qshare/core/error.hpp"
#include "qshare/core/sql_ast.hpp"

namespace qshare::plan {

using dq::NodePtr;
using dq::OpKind;
using ir::ColumnRef;
using ir::PredicateNF;
using ir::QuerySpec;

namespace {

bool safe_identifier(const std::string& name) {
  if (name.empty() || name == "query_set" || name == "query_id" || name == "rn") return false;
  if (!(std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_')) return false;
  for (char c : name) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    if (std::isupper(static_cast<unsigned char>(c))) return false;
  }
  try {
    auto stmt = sql::parse_select("SELECT 1 AS " + name);
    return stmt.items.size() == 1 && stmt.items[0].alias == name;
  } catch (const Error&) {
    return false;
  }
}

/// Appends disjuncts of `add` to `into`, skipping duplicates.
void or_into(PredicateNF& into, const PredicateNF& add) {
  for (const auto& d : add.disjuncts) {
    if (std::find(into.disjuncts.begin(), into.disjuncts.end(), d) == into.disjuncts.end()) {
      into.disjuncts.push_back(d);
    }
  }
}

bool exact_pushdown(const QuerySpec& s) { return s.base_relations.size() == 1 || s.predicate.disjuncts.size() <= 1; }

std::vector<std::string> scan_columns(const std::vector<const QuerySpec*>& specs, const ir::TableSchema& table) {
  std::set<std::string> used;
  for (const auto* s : specs) {
    for (const auto& c : ir::referenced_columns(*s, table)) used.insert(c);
  }
  std::vector<std::string> out;
  for (const auto& c : table.columns) {
    if (used.count(c.name)) out.push_back(c.name);
  }
  if (out.empty()) out.push_back(table.columns.front().name);
  return out;
}

std::vector<std::pair<ColumnRef, ColumnRef>> join_keys(const QuerySpec& s, const std::string& table) {
  std::vector<std::pair<ColumnRef, ColumnRef>> keys;
  for (const auto& e : s.join_edges) {
    if (e.right.table == table) keys.emplace_back(e.left, e.right);
  }
  return keys;
}

std::string core_signature(const QuerySpec& s) {
  std::string out;
  for (const auto& r : s.base_relations) out += r + ",";
  out += "|";
  for (const auto& e : s.join_edges) out += e.left.qualified() + "=" + e.right.qualified() + ",";
  return out;
}

/// Everything above the scan/join core.
NodePtr finish_plan(NodePtr cur, const std::vector<QuerySpec>& specs, const std::vector<std::string>& names) {
  const QuerySpec& first = specs.front();
  if (first.grouping) {
    std::vector<dq::NamedAggregate> aggs;
    std::vector<dq::ProjectItem> items;
    for (std::size_t i = 0; i < first.projections.size(); ++i) {
      const auto& p = first.projections[i];
      if (!p.is_aggregate) {
        items.push_back({p.expr, {"", names[i]}});
        continue;
      }
      auto it = std::find_if(aggs.begin(), aggs.end(), [&](const auto& a) { return a.agg == p.agg; });
      if (it == aggs.end()) {
        aggs.push_back({p.agg, "agg_" + std::to_string(aggs.size() + 1)});
        it = aggs.end() - 1;
      }
      items.push_back({ir::ScalarExpr::col({"", it->name}), {"", names[i]}});
    }
    cur = dq::make_group(dq::make_unnest(cur), first.grouping->keys, aggs);
    cur = dq::make_project(cur, items);
  } else {
    std::vector<dq::ProjectItem> items;
    for (std::size_t i = 0; i < first.projections.size(); ++i) {
      items.push_back({first.projections[i].expr, {"", names[i]}});
    }
    cur = dq::make_project(cur, items);
    bool any_limit = std::any_of(specs.begin(), specs.end(), [](const auto& s) { return s.limit.has_value(); });
    if (!first.ordering.empty() || any_limit) cur = dq::make_unnest(cur);
  }
  std::vector<dq::SortKey> sort;
  for (const auto& k : first.ordering) sort.push_back({{"", names[k.output_index]}, k.descending});
  std::vector<std::optional<std::uint64_t>> limits;
  if (std::any_of(specs.begin(), specs.end(), [](const auto& s) { return s.limit.has_value(); })) {
    for (const auto& s : specs) limits.push_back(s.limit);
  }
  return dq::make_order_limit(cur, sort, limits);
}

/// Annotated scans and joins with per-table pushdown, plus a residual selection when
/// pushdown does not capture a predicate exactly.
NodePtr annotated_core(const std::vector<QuerySpec>& specs, const ir::Catalog& catalog) {
  const QuerySpec& first = specs.front();
  std::vector<const QuerySpec*> ptrs;
  for (const auto& s : specs) ptrs.push_back(&s);
  std::vector<std::string> annotated;
  for (const auto& t : first.base_relations) {
    bool any = std::any_of(specs.begin(), specs.end(), [&](const auto& s) { return !push_down(s.predicate, t).is_true(); });
    if (any) annotated.push_back(t);
  }
  if (annotated.empty()) annotated.push_back(first.base_relations.front());

  NodePtr cur;
  for (const auto& t : first.base_relations) {
    const auto& table = catalog.table(t);
    auto cols = scan_columns(ptrs, table);
    NodePtr scan;
    if (std::find(annotated.begin(), annotated.end(), t) != annotated.end()) {
      dq::QueryPredicates preds;
      for (const auto& s : specs) preds.push_back(push_down(s.predicate, t));
      scan = dq::make_scan(table, cols, preds);
    } else {
      scan = dq::make_filter_scan(table, cols, PredicateNF::always_true());
    }
    cur = cur ? dq::make_join(cur, scan, join_keys(first, t)) : scan;
  }
  if (!std::all_of(specs.begin(), specs.end(), exact_pushdown)) {
    dq::QueryPredicates preds;
    for (const auto& s : specs) preds.push_back(exact_pushdown(s) ? PredicateNF::always_true() : s.predicate);
    cur = dq::make_select(cur, preds);
  }
  return cur;
}

SharedPlan make_plan(const std::vector<const ir::BatchMember*>& members, std::uint64_t batch_id,
                     const ir::Catalog& catalog, const NodePtr& core) {
  SharedPlan p;
  p.batch_id = batch_id;
  for (const auto* m : members) {
    p.ids.push_back(m->id);
    p.original_ids.push_back(m->original_id);
    p.specs.push_back(m->spec);
  }
  p.output_names = output_names(p.specs.front());
  NodePtr cur;
  if (core) {
    dq::QueryPredicates preds;
    for (const auto& s : p.specs) preds.push_back(s.predicate);
    cur = dq::make_select(core, preds);
  } else {
    cur = annotated_core(p.specs, catalog);
  }
  p.root = finish_plan(cur, p.specs, p.output_names);
  dq::check_plan(*p.root);
  return p;
}

std::vector<std::vector<const ir::BatchMember*>> by_shape(const ir::QueryBatch& batch) {
  std::vector<std::string> keys;
  std::vector<std::vector<const ir::BatchMember*>> groups;
  for (const auto& m : batch.members) {
    auto key = ir::shape_key(m.spec);
    auto it = std::find(keys.begin(), keys.end(), key);
    if (it == keys.end()) {
      keys.push_back(key);
      groups.emplace_back();
      it = keys.end() - 1;
    }
    groups[static_cast<std::size_t>(it - keys.begin())].push_back(&m);
  }
  return groups;
}

}  // namespace

std::vector<std::string> output_names(const QuerySpec& spec) {
  std::vector<std::string> out;
  std::set<std::string> used;
  for (std::size_t i = 0; i < spec.projections.size(); ++i) {
    std::string name = spec.projections[i].output_name();
    if (!safe_identifier(name)) name = "col_" + std::to_string(i + 1);
    std::string base = name;
    for (int k = 2; used.count(name); ++k) name = base + "_" + std::to_string(k);
    used.insert(name);
    out.push_back(name);
  }
  return out;
}

PredicateNF push_down(const PredicateNF& pred, const std::string& table) {
  if (pred.is_false()) return pred;
  PredicateNF out;
  for (const auto& d : pred.disjuncts) {
    ir::Conjunction c;
    for (const auto& a : d.atoms) {
      if (a.column.table == table) c.atoms.push_back(a);
    }
    if (c.atoms.empty()) return PredicateNF::always_true();
    or_into(out, PredicateNF{{c}});
  }
  return out;
}

SharedPlan build_shared_plan(const ir::QueryBatch& batch, const ir::Catalog& catalog) {
  if (batch.members.empty()) throw PlanError("empty batch");
  auto groups = by_shape(batch);
  if (groups.size() != 1) throw PlanError("batch members have " + std::to_string(groups.size()) + " different shapes");
  return make_plan(groups.front(), batch.batch_id, catalog, nullptr);
}

std::vector<SharedPlan> build_batch_plans(const ir::QueryBatch& batch, const ir::Catalog& catalog) {
  std::vector<SharedPlan> out;
  for (const auto& g : by_shape(batch)) out.push_back(make_plan(g, batch.batch_id, catalog, nullptr));
  return out;
}

std::map<const dq::PlanNode*, std::size_t> SharedPlanDag::consumers() const {
  std::map<const dq::PlanNode*, std::size_t> count;
  std::set<const dq::PlanNode*> seen;
  std::function<void(const dq::PlanNode&)> walk = [&](const dq::PlanNode& n) {
    if (!seen.insert(&n).second) return;
    for (const auto& in : n.inputs) {
      ++count[in.get()];
      walk(*in);
    }
  };
  for (const auto& s : sinks) {
    ++count[s.root.get()];
    walk(*s.root);
  }
  return count;
}

std::size_t SharedPlanDag::shared_node_count() const {
  std::size_t n = 0;
  for (const auto& [node, c] : consumers()) n += c > 1;
  return n;
}

SharedPlanDag build_global_plan(const std::vector<ir::QueryBatch>& batches, const ir::Catalog& catalog) {
  struct Group {
    const ir::QueryBatch* batch;
    std::vector<const ir::BatchMember*> members;
  };
  std::vector<Group> groups;
  for (const auto& b : batches) {
    for (auto& g : by_shape(b)) groups.push_back({&b, std::move(g)});
  }
  std::map<std::string, std::vector<std::size_t>> by_core;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    by_core[core_signature(groups[i].members.front()->spec)].push_back(i);
  }

  std::vector<NodePtr> cores(groups.size());
  for (const auto& [sig, idx] : by_core) {
    if (idx.size() < 2) continue;
    const QuerySpec& first = groups[idx.front()].members.front()->spec;
    std::vector<const QuerySpec*> all;
    for (auto i : idx) {
      for (const auto* m : groups[i].members) all.push_back(&m->spec);
    }
    NodePtr cur;
    for (const auto& t : first.base_relations) {
      PredicateNF filter;
      bool any_true = false;
      for (const auto* s : all) {
        auto p = push_down(s->predicate, t);
        if (p.is_true()) {
          any_true = true;
          break;
        }
        or_into(filter, p);
      }
      if (any_true) filter = PredicateNF::always_true();
      const auto& table = catalog.table(t);
      auto scan = dq::make_filter_scan(table, scan_columns(all, table), filter);
      cur = cur ? dq::make_join(cur, scan, join_keys(first, t)) : scan;
    }
    for (auto i : idx) cores[i] = cur;
  }

  SharedPlanDag dag;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    dag.sinks.push_back(make_plan(groups[i].members, groups[i].batch->batch_id, catalog, cores[i]));
  }
  return dag;
}

std::string_view to_string(SplitPolicy policy) {
  switch (policy) {
    case SplitPolicy::Heuristic: return "heuristic";
    case SplitPolicy::AlwaysDuplicate: return "always-duplicate";
    case SplitPolicy::AlwaysMaterialize: return "always-materialize";
  }
  return "";
}

SplitPolicy parse_split_policy(std::string_view name) {
  if (name == "heuristic") return SplitPolicy::Heuristic;
  if (name == "always-duplicate") return SplitPolicy::AlwaysDuplicate;
  if (name == "always-materialize") return SplitPolicy::AlwaysMaterialize;
  throw PlanError("unknown split policy '" + std::string(name) + "'");
}

std::size_t ExecutionScript::materialize_count() const {
  return static_cast<std::size_t>(std::count_if(steps.begin(), steps.end(), [](const auto& s) {
    return s.kind == ScriptStep::Kind::Materialize;
  }));
}

std::size_t ExecutionScript::run_count() const { return steps.size() - materialize_count(); }

std::string ExecutionScript::to_json() const {
  nlohmann::json doc;
  doc["dialect"] = dialect;
  doc["mode"] = std::string(sqlgen::to_string(mode));
  doc["steps"] = nlohmann::json::array();
  for (const auto& s : steps) {
    nlohmann::json j;
    j["id"] = s.id;
    j["kind"] = s.kind == ScriptStep::Kind::Materialize ? "materialize" : "run";
    if (s.kind == ScriptStep::Kind::Materialize) {
      j["temp_table"] = s.temp_name;
    } else {
      const auto& sink = sinks[s.sink];
      j["sink"] = s.sink;
      j["batch_id"] = sink.batch_id;
      j["queries"] = sink.original_ids;
      j["output_columns"] = sink.output_names;
    }
    j["columns"] = s.columns;
    j["depends_on"] = s.depends_on;
    j["bytes"] = s.sql.size();
    j["sql"] = s.sql;
    doc["steps"].push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

ExecutionScript split_dag(const SharedPlanDag& dag, const SplitOptions& options,
                          const sqlgen::DialectProfile& dialect, const ir::Catalog& catalog,
                          const cost::TableStats& stats) {
  ExecutionScript script;
  script.dialect = dialect.name;
  script.mode = options.mode;
  auto counts = dag.consumers();

  // Decide, in first-visit order, which shared nodes to materialize.
  std::vector<const dq::PlanNode*> order;
  std::set<const dq::PlanNode*> seen;
  std::function<void(const NodePtr&)> visit = [&](const NodePtr& n) {
    if (!seen.insert(n.get()).second) return;
    for (const auto& in : n->inputs) visit(in);
    order.push_back(n.get());
  };
  for (const auto& s : dag.sinks) visit(s.root);

  std::map<const dq::PlanNode*, NodePtr> replaced;  // shared node -> temp scan
  std::map<const dq::PlanNode*, std::size_t> step_of;
  std::map<const dq::PlanNode*, NodePtr> owners;
  std::function<void(const NodePtr&)> own = [&](const NodePtr& n) {
    owners.emplace(n.get(), n);
    for (const auto& in : n->inputs) own(in);
  };
  for (const auto& s : dag.sinks) own(s.root);

  // Deep copy, so every statement owns a tree; materialized nodes become temp scans.
  std::function<NodePtr(const NodePtr&, std::set<std::size_t>&, bool)> rewrite =
      [&](const NodePtr& n, std::set<std::size_t>& deps, bool top) -> NodePtr {
    auto r = replaced.find(n.get());
    if (!top && r != replaced.end()) {
      deps.insert(step_of[n.get()]);
      return std::make_shared<dq::PlanNode>(*r->second);
    }
    auto copy = std::make_shared<dq::PlanNode>(*n);
    for (auto& in : copy->inputs) in = rewrite(in, deps, false);
    return copy;
  };

  for (const auto* node : order) {
    std::size_t c = counts[node];
    if (c < 2) continue;
    bool materialize = false;
    switch (options.policy) {
      case SplitPolicy::AlwaysDuplicate: break;
      case SplitPolicy::AlwaysMaterialize: materialize = true; break;
      case SplitPolicy::Heuristic:
        materialize = cost::estimate_bytes(*node, stats, catalog) * static_cast<double>(c - 1) >
                      options.factor * cost::recompute_bytes(*node, stats);
        break;
    }
    if (!materialize) continue;
    if (!dialect.reads_materialized) {
      throw PlanError("dialect '" + dialect.name + "' cannot read back materialized intermediates");
    }
    if (dq::output_kind(*node) != dq::AnnotationKind::None) {
      throw PlanError("only unannotated subplans can be materialized");
    }
    ScriptStep step;
    std::set<std::size_t> deps;
    step.plan = rewrite(owners.at(node), deps, true);
    auto rendered = sqlgen::render_plan(step.plan, dialect, catalog, options.mode);
    step.id = script.steps.size();
    step.kind = ScriptStep::Kind::Materialize;
    step.sql = rendered.sql;
    step.columns = rendered.columns;
    step.types = rendered.types;
    step.temp_name = "qs_tmp_" + hex64(ir::fnv1a(rendered.sql));
    step.depends_on.assign(deps.begin(), deps.end());
    auto temp = dq::make_temp_scan(step.temp_name, dq::output_schema(*node, catalog));
    temp->est_rows = cost::estimate_rows(*node, stats);
    temp->est_bytes = cost::estimate_bytes(*node, stats, catalog);
    replaced[node] = temp;
    step_of[node] = step.id;
    script.steps.push_back(std::move(step));
  }

  for (std::size_t i = 0; i < dag.sinks.size(); ++i) {
    std::set<std::size_t> deps;
    SharedPlan sink = dag.sinks[i];
    sink.root = rewrite(sink.root, deps, false);
    auto rendered = sqlgen::render_plan(sink.root, dialect, catalog, options.mode);
    ScriptStep step;
    step.id = script.steps.size();
    step.kind = ScriptStep::Kind::Run;
    step.plan = sink.root;
    step.sql = rendered.sql;
    step.columns = rendered.columns;
    step.types = rendered.types;
    step.sink = i;
    step.depends_on.assign(deps.begin(), deps.end());
    script.steps.push_back(std::move(step));
    script.sinks.push_back(std::move(sink));
  }
  return script;
}

ExecutionScript plan_batch(const ir::QueryBatch& batch, const sqlgen::DialectProfile& dialect,
                           const ir::Catalog& catalog, sqlgen::ScanMode mode) {
  SharedPlanDag dag;
  dag.sinks = build_batch_plans(batch, catalog);
  SplitOptions options;
  options.policy = SplitPolicy::AlwaysDuplicate;
  options.mode = mode;
  return split_dag(dag, options, dialect, catalog, cost::TableStats::from_catalog(catalog));
}

}  // namespace qshare::plan
