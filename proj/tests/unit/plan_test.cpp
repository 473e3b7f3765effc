#include <gtest/gtest.h>

#include <json.hpp>
#include <random>
#include <set>

#include "qshare/core/error.hpp"
#include "qshare/exec/equivalence.hpp"
#include "qshare/plan/shared_plan.hpp"
#include "random_workload.hpp"
#include "test_support.hpp"

namespace qshare::plan {
namespace {

using qshare::testing::employees_catalog;

ir::QueryBatch batch_of(const std::vector<std::string>& sql, const ir::Catalog& catalog, std::uint64_t id = 0) {
  ir::QueryBatch b;
  b.batch_id = id;
  for (std::size_t i = 0; i < sql.size(); ++i) {
    b.members.push_back({ir::QueryId{static_cast<std::uint32_t>(i + 1)},
                         "b" + std::to_string(id) + "_q" + std::to_string(i + 1), ir::parse_query(sql[i], catalog)});
  }
  return b;
}

const std::string kJoin = "FROM employees E JOIN departments D ON E.dept_id = D.dept_id";

std::vector<ir::QueryBatch> three_join_consumers(const ir::Catalog& catalog) {
  return {batch_of({"SELECT E.name, D.city " + kJoin + " WHERE E.age > 30",
                    "SELECT E.name, D.city " + kJoin + " WHERE D.city = 'Basel'"},
                   catalog, 1),
          batch_of({"SELECT D.region, COUNT(*) AS n " + kJoin + " WHERE E.salary > 2000.0 GROUP BY D.region"}, catalog, 2),
          batch_of({"SELECT E.id, D.address " + kJoin + " WHERE E.id < 40 ORDER BY E.id LIMIT 5",
                    "SELECT E.id, D.address " + kJoin + " WHERE D.region = 'EU' ORDER BY E.id LIMIT 3"},
                   catalog, 3)};
}

/// Base tables big enough that recomputing the join costs more than rereading its output.
cost::TableStats big_stats(const ir::Catalog& catalog) {
  auto stats = cost::TableStats::from_catalog(catalog);
  for (auto& [name, t] : stats.tables) {
    t.row_count *= 1000;
    for (auto& [c, s] : t.columns) s.total_bytes *= 1000;
  }
  return stats;
}

void walk(const dq::NodePtr& n, std::map<const dq::PlanNode*, int>& seen) {
  if (++seen[n.get()] > 1) return;
  for (const auto& c : n->inputs) walk(c, seen);
}

TEST(SplitDag, SingleConsumerHasNoMaterialization) {
  auto catalog = employees_catalog();
  auto dag = build_global_plan({batch_of({"SELECT id FROM employees WHERE age > 30", "SELECT id FROM employees WHERE age < 20"}, catalog)},
                               catalog);
  auto script = split_dag(dag, {}, sqlgen::builtin_dialect("reference"), catalog, big_stats(catalog));
  EXPECT_EQ(script.run_count(), 1u);
  EXPECT_EQ(script.materialize_count(), 0u);
}

TEST(SplitDag, SharedJoinIsMaterializedOnce) {
  auto catalog = employees_catalog();
  auto dag = build_global_plan(three_join_consumers(catalog), catalog);
  ASSERT_EQ(dag.sinks.size(), 3u);
  EXPECT_GE(dag.shared_node_count(), 1u);
  auto script = split_dag(dag, {}, sqlgen::builtin_dialect("reference"), catalog, big_stats(catalog));
  EXPECT_EQ(script.materialize_count(), 1u);
  EXPECT_EQ(script.run_count(), 3u);
  for (const auto& step : script.steps) {
    if (step.kind == ScriptStep::Kind::Run) {
      ASSERT_EQ(step.depends_on.size(), 1u);
      EXPECT_EQ(script.steps[step.depends_on[0]].kind, ScriptStep::Kind::Materialize);
    }
  }
}

TEST(SplitDag, AlwaysDuplicate) {
  auto catalog = employees_catalog();
  auto dag = build_global_plan(three_join_consumers(catalog), catalog);
  SplitOptions options;
  options.policy = SplitPolicy::AlwaysDuplicate;
  auto script = split_dag(dag, options, sqlgen::builtin_dialect("reference"), catalog, big_stats(catalog));
  EXPECT_EQ(script.materialize_count(), 0u);
  EXPECT_EQ(script.run_count(), 3u);
}

TEST(SplitDag, ResultIsAForestOfTrees) {
  auto catalog = employees_catalog();
  auto dag = build_global_plan(three_join_consumers(catalog), catalog);
  for (auto policy : {SplitPolicy::Heuristic, SplitPolicy::AlwaysDuplicate, SplitPolicy::AlwaysMaterialize}) {
    SplitOptions options;
    options.policy = policy;
    auto script = split_dag(dag, options, sqlgen::builtin_dialect("reference"), catalog, big_stats(catalog));
    std::map<const dq::PlanNode*, int> seen;
    for (const auto& step : script.steps) walk(step.plan, seen);
    for (const auto& [node, count] : seen) EXPECT_EQ(count, 1) << to_string(policy);
  }
}

TEST(SplitDag, MaterializedIntermediatesAreUnannotated) {
  auto catalog = employees_catalog();
  auto dag = build_global_plan(three_join_consumers(catalog), catalog);
  SplitOptions options;
  options.policy = SplitPolicy::AlwaysMaterialize;
  auto script = split_dag(dag, options, sqlgen::builtin_dialect("reference"), catalog, big_stats(catalog));
  ASSERT_GE(script.materialize_count(), 1u);
  for (const auto& step : script.steps) {
    if (step.kind != ScriptStep::Kind::Materialize) continue;
    EXPECT_EQ(dq::output_kind(*step.plan), dq::AnnotationKind::None);
    for (const auto& c : step.columns) {
      EXPECT_NE(c, "query_set");
      EXPECT_NE(c, "query_id");
    }
    EXPECT_EQ(step.temp_name.rfind("qs_tmp_", 0), 0u);
  }
}

TEST(SplitDag, RenderOnlyDialectCannotMaterialize) {
  auto catalog = employees_catalog();
  auto dag = build_global_plan(three_join_consumers(catalog), catalog);
  SplitOptions options;
  options.policy = SplitPolicy::AlwaysMaterialize;
  EXPECT_THROW(split_dag(dag, options, sqlgen::builtin_dialect("standard-like"), catalog, big_stats(catalog)),
               PlanError);
  options.policy = SplitPolicy::AlwaysDuplicate;
  EXPECT_NO_THROW(split_dag(dag, options, sqlgen::builtin_dialect("standard-like"), catalog, big_stats(catalog)));
}

TEST(SplitDag, ScriptJson) {
  auto catalog = employees_catalog();
  auto script = split_dag(build_global_plan(three_join_consumers(catalog), catalog), {},
                          sqlgen::builtin_dialect("reference"), catalog, big_stats(catalog));
  auto j = nlohmann::json::parse(script.to_json());
  ASSERT_TRUE(j.contains("steps"));
  EXPECT_EQ(j["steps"].size(), script.steps.size());
  EXPECT_EQ(j["dialect"], "reference");
}

TEST(SplitPolicyNames, RoundTrip) {
  for (auto p : {SplitPolicy::Heuristic, SplitPolicy::AlwaysDuplicate, SplitPolicy::AlwaysMaterialize}) {
    EXPECT_EQ(parse_split_policy(to_string(p)), p);
  }
  EXPECT_THROW(parse_split_policy("sometimes"), PlanError);
}

TEST(SharedPlan, MixedShapesAreRejected) {
  auto catalog = employees_catalog();
  auto b = batch_of({"SELECT id FROM employees", "SELECT name FROM employees"}, catalog);
  EXPECT_THROW(build_shared_plan(b, catalog), PlanError);
  EXPECT_EQ(build_batch_plans(b, catalog).size(), 2u);
}

TEST(SharedPlan, OutputNames) {
  auto catalog = employees_catalog();
  auto spec = ir::parse_query("SELECT id, id, age * 2, name AS query_set FROM employees", catalog);
  auto names = output_names(spec);
  ASSERT_EQ(names.size(), 4u);
  EXPECT_EQ(names[0], "id");
  EXPECT_NE(names[1], "id");
  std::set<std::string> unique(names.begin(), names.end());
  EXPECT_EQ(unique.size(), 4u);
  EXPECT_EQ(unique.count("query_set"), 0u);
}

TEST(SharedPlan, PushDown) {
  auto catalog = employees_catalog();
  auto spec = ir::parse_query("SELECT * " + kJoin + " WHERE E.age > 3 AND D.city = 'Basel'", catalog);
  EXPECT_EQ(ir::unparse_predicate(push_down(spec.predicate, "employees")), "employees.age > 3");
  auto mixed = ir::parse_query("SELECT * " + kJoin + " WHERE E.age > 3 OR D.city = 'Basel'", catalog);
  EXPECT_TRUE(push_down(mixed.predicate, "employees").is_true());
}

/// Cross-batch sharing stays equivalent under every split policy.
TEST(SplitDag, GlobalRandomEquivalence) {
  auto catalog = employees_catalog();
  std::mt19937_64 rng(99);
  std::size_t materialized = 0;
  for (int round = 0; round < 25; ++round) {
    auto db = qshare::testing::random_employees_db(rng, catalog, 150, true);
    std::vector<ir::QueryBatch> batches;
    for (std::uint64_t b = 0; b < 3; ++b) batches.push_back(qshare::testing::random_batch(rng, catalog, 150, b, 6));
    for (auto policy : {SplitPolicy::Heuristic, SplitPolicy::AlwaysDuplicate, SplitPolicy::AlwaysMaterialize}) {
      exec::ReferenceBackend backend(db);
      exec::EquivalenceConfig config;
      config.global = true;
      config.split.policy = policy;
      auto report = exec::equivalence_check(batches, backend, catalog, config);
      ASSERT_TRUE(report.ok()) << "round " << round << " " << to_string(policy) << "\n" << report.to_text();
      if (policy == SplitPolicy::AlwaysMaterialize) materialized += report.materialized;
    }
  }
  EXPECT_GT(materialized, 10u);
}

}  // namespace
}  // namespace qshare::plan
