#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "qshare/exec/equivalence.hpp"
#include "qshare/plan/shared_plan.hpp"
#include "qshare/workload/workload.hpp"
#include "test_support.hpp"

namespace qshare::workload {
namespace {

WorkloadSpec rows_spec(std::uint64_t lineitem_rows, std::size_t instances = 4) {
  WorkloadSpec spec;
  spec.scale_factor = static_cast<double>(lineitem_rows) / 6e6;
  spec.instances = instances;
  return spec;
}

TEST(GenerateData, DenseColumn) {
  auto spec = rows_spec(10000);
  auto catalog = workload_catalog(spec);
  auto db = generate_database(spec, catalog);
  const auto& li = db.table("lineitem");
  ASSERT_EQ(li.rows.size(), 10000u);
  auto col = li.schema.index_of({"lineitem", "l_dense"});
  for (std::size_t i = 0; i < li.rows.size(); ++i) ASSERT_EQ(li.rows[i][col], Value(static_cast<std::int64_t>(i + 1)));
}

TEST(GenerateData, DeterministicFiles) {
  auto base = std::filesystem::temp_directory_path() / "qshare_workload_test";
  auto spec = rows_spec(2000);
  generate_data(spec, (base / "a").string());
  generate_data(spec, (base / "b").string());
  for (const auto* f : {"lineitem.tbl", "orders.tbl", "customer.tbl", "catalog.json"}) {
    auto a = qshare::testing::read_file((base / "a" / f).string());
    auto b = qshare::testing::read_file((base / "b" / f).string());
    EXPECT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, b) << f;
  }
  auto catalog = ir::Catalog::load((base / "a" / "catalog.json").string());
  auto loaded = dq::load_database((base / "a").string(), catalog);
  auto direct = generate_database(spec, workload_catalog(spec));
  EXPECT_EQ(loaded.table("orders").rows, direct.table("orders").rows);
  std::filesystem::remove_all(base);
}

TEST(GenerateData, DenseSelectivity) {
  for (std::uint64_t n : {1000u, 10000u, 777u}) {
    for (double s : {0.0001, 0.01, 0.1, 0.5, 0.99, 1.0}) {
      auto [lo, hi] = dense_range(s, n, 3);
      auto matched = static_cast<double>(hi - lo + 1);
      EXPECT_LE(std::abs(matched - std::ceil(s * static_cast<double>(n))), 1.0) << n << " " << s;
      EXPECT_LE(hi, n);
    }
  }
}

TEST(GenerateData, DenseScanQueriesMatchTheirSelectivity) {
  auto spec = rows_spec(5000);
  auto catalog = workload_catalog(spec);
  auto db = generate_database(spec, catalog);
  auto records = dense_scan_queries(8, 0.05, 5000, 3);
  for (const auto& [id, query] : ir::parse_records(records, catalog)) {
    auto rows = dq::evaluate_query(query, db).rows.size();
    EXPECT_LE(std::abs(static_cast<double>(rows) - 250.0), 1.0) << id;
  }
}

TEST(GenerateQueries, Q6InstancesDifferOnlyInConstants) {
  WorkloadSpec spec;
  spec.templates = {TemplateKind::Q6};
  spec.instances = 128;
  auto records = generate_queries(spec);
  ASSERT_EQ(records.size(), 128u);
  auto catalog = workload_catalog(spec);
  std::set<std::uint64_t> templates;
  std::set<std::string> texts;
  for (const auto& [id, query] : ir::parse_records(records, catalog)) {
    templates.insert(ir::extract_template(query).template_id);
    texts.insert(ir::unparse(query));
  }
  EXPECT_EQ(templates.size(), 1u);
  EXPECT_GT(texts.size(), 1u);
}

TEST(GenerateQueries, DeterministicForSeed) {
  WorkloadSpec spec;
  EXPECT_EQ(ir::to_batch_text(generate_queries(spec)), ir::to_batch_text(generate_queries(spec)));
  WorkloadSpec other = spec;
  other.seed = 2;
  EXPECT_NE(ir::to_batch_text(generate_queries(spec)), ir::to_batch_text(generate_queries(other)));
}

TEST(GenerateQueries, EveryTemplateParsesWithConstantHash) {
  WorkloadSpec spec;
  spec.instances = 16;
  auto catalog = workload_catalog(spec);
  std::map<std::string, std::set<std::uint64_t>> hashes;
  for (const auto& [id, query] : ir::parse_records(generate_queries(spec), catalog)) {
    hashes[id.substr(0, id.find('_'))].insert(ir::extract_template(query).template_id);
  }
  EXPECT_EQ(hashes.size(), 5u);
  for (const auto& [name, h] : hashes) EXPECT_EQ(h.size(), 1u) << name;
}

TEST(GenerateQueries, SingleInstanceRuns) {
  WorkloadSpec spec = rows_spec(600, 1);
  auto catalog = workload_catalog(spec);
  auto db = generate_database(spec, catalog);
  exec::ReferenceEngine engine(db);
  for (const auto& [id, query] : ir::parse_records(generate_queries(spec), catalog)) {
    EXPECT_NO_THROW(engine.execute(ir::unparse(query))) << id;
  }
}

TEST(GlobalPlan, JoinTemplatesShareTheirCore) {
  WorkloadSpec spec = rows_spec(1200, 3);
  spec.templates = {TemplateKind::Q3, TemplateKind::Q10};
  auto catalog = workload_catalog(spec);
  auto batching = ir::group_batch(ir::parse_records(generate_queries(spec), catalog), ir::GroupingPolicy::PerTemplate, 16);
  ASSERT_EQ(batching.batches.size(), 2u);
  auto dag = plan::build_global_plan(batching.batches, catalog);
  auto consumers = dag.consumers();
  std::size_t shared_joins = 0;
  for (const auto& [node, count] : consumers) {
    if (node->kind == dq::OpKind::Join && count == 2) ++shared_joins;
  }
  EXPECT_GE(shared_joins, 1u);
}

TEST(DeskWorkload, EquivalentPerTemplate) {
  WorkloadSpec spec = rows_spec(3000, 8);
  auto catalog = workload_catalog(spec);
  auto db = generate_database(spec, catalog);
  auto batching = ir::group_batch(ir::parse_records(generate_queries(spec), catalog), ir::GroupingPolicy::PerTemplate, 16);
  exec::ReferenceBackend backend(db);
  for (auto mode : {sqlgen::ScanMode::Linear, sqlgen::ScanMode::Indexed}) {
    exec::EquivalenceConfig config;
    config.split.mode = mode;
    auto report = exec::equivalence_check(batching.batches, backend, catalog, config);
    EXPECT_TRUE(report.ok()) << report.to_text();
    std::size_t nonempty = 0;
    for (const auto& q : report.queries) nonempty += q.single_rows > 0;
    EXPECT_GT(nonempty, report.queries.size() / 2);
  }
}

}  // namespace
}  // namespace qshare::workload
