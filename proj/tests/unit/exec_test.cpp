#include <gtest/gtest.h>

#include <random>

#include "qshare/core/error.hpp"
#include "qshare/dq/plan.hpp"
#include "qshare/exec/equivalence.hpp"
#include "random_workload.hpp"
#include "test_support.hpp"

namespace qshare::exec {
namespace {

using qshare::testing::employees_catalog;

dq::Database small_db(std::size_t rows, std::uint64_t seed = 7, bool nulls = true) {
  std::mt19937_64 rng(seed);
  return qshare::testing::random_employees_db(rng, employees_catalog(), rows, nulls);
}

ir::QueryBatch batch_of(const std::vector<std::string>& sql, const ir::Catalog& catalog) {
  ir::QueryBatch b;
  for (std::size_t i = 0; i < sql.size(); ++i) {
    b.members.push_back({ir::QueryId{static_cast<std::uint32_t>(i + 1)}, "q" + std::to_string(i + 1),
                         ir::parse_query(sql[i], catalog)});
  }
  return b;
}

TEST(ReferenceEngine, SmokeStatement) {
  ReferenceEngine engine;
  auto r = engine.execute("SELECT 1");
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0][0], Value(1));
}

TEST(ReferenceEngine, MissingTable) {
  ReferenceEngine engine;
  EXPECT_THROW(engine.execute("SELECT * FROM nowhere"), CatalogError);
}

TEST(ReferenceEngine, SharedScanMatchesOperator) {
  auto catalog = employees_catalog();
  auto db = small_db(100);
  ReferenceEngine engine(db);
  auto sql = qshare::testing::read_file(qshare::testing::data_path("golden_scan.sql"));
  auto result = engine.execute(sql);
  auto oracle = dq::shared_scan(db.table("employees"), qshare::testing::scan_example_predicates(catalog));
  ASSERT_EQ(result.rows.size(), oracle.rows.size());
  for (std::size_t i = 0; i < oracle.rows.size(); ++i) {
    Row expected = oracle.rows[i];
    expected.push_back(oracle.annotations[i].to_value());
    EXPECT_EQ(result.rows[i], expected) << i;
  }
}

TEST(ReferenceEngine, FunctionsAndWindows) {
  ReferenceEngine engine;
  auto r = engine.execute(
      "SELECT ARRAY_INTERSECT(ARRAY[1, 2, 3], ARRAY[3, 2]), CARDINALITY(ARRAY_REMOVE(ARRAY[0, 4, 0], 0)), "
      "CONTAINS(ARRAY[5], 5), BITWISE_AND(6, 3), 1 << 63, BIT_COUNT(7), SEQUENCE(1, 3)");
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0][0], Value(IntArray{2, 3}));
  EXPECT_EQ(r.rows[0][1], Value(1));
  EXPECT_EQ(r.rows[0][2], Value(true));
  EXPECT_EQ(r.rows[0][3], Value(2));
  EXPECT_EQ(r.rows[0][4], Value(std::numeric_limits<std::int64_t>::min()));
  EXPECT_EQ(r.rows[0][5], Value(3));
  EXPECT_EQ(r.rows[0][6], Value(IntArray{1, 2, 3}));

  ResultTable t;
  t.columns = {"g", "v"};
  for (int i = 0; i < 6; ++i) t.rows.push_back({Value(i % 2), Value(10 - i)});
  engine.add_table("t", t);
  auto w = engine.execute(
      "WITH r AS (SELECT *, ROW_NUMBER() OVER (PARTITION BY g ORDER BY v) AS rn FROM t) "
      "SELECT g, v FROM r WHERE rn <= 2 ORDER BY g, v");
  ASSERT_EQ(w.rows.size(), 4u);
  EXPECT_EQ(w.rows[0], (Row{Value(0), Value(6)}));
  EXPECT_EQ(w.rows[3], (Row{Value(1), Value(7)}));
}

TEST(ReferenceEngine, GlobalAggregateOverEmptyInput) {
  auto db = small_db(10);
  ReferenceEngine engine(db);
  auto r = engine.execute("SELECT COUNT(*), SUM(age) FROM employees WHERE id < 0");
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0][0], Value(0));
  EXPECT_TRUE(r.rows[0][1].is_null());
}

TEST(DemuxResults, SetAnnotations) {
  ResultTable shared;
  shared.columns = {"row_id", "name", "query_set"};
  shared.annotation_column = "query_set";
  shared.rows = {{Value(1), Value("EUROPE"), Value(IntArray{3, 4, 5})}, {Value(2), Value("AMERICA"), Value(IntArray{2, 3})}};
  auto parts = demux_results(shared, 5);
  ASSERT_EQ(parts.size(), 5u);
  EXPECT_TRUE(parts[1].rows.empty());
  EXPECT_EQ(parts[2].rows, (std::vector<Row>{{Value(2), Value("AMERICA")}}));
  EXPECT_EQ(parts[3].rows.size(), 2u);
  EXPECT_EQ(parts[4].rows, (std::vector<Row>{{Value(1), Value("EUROPE")}}));
  EXPECT_EQ(parts[5].rows, (std::vector<Row>{{Value(1), Value("EUROPE")}}));
  EXPECT_EQ(parts[3].columns, (std::vector<std::string>{"row_id", "name"}));
}

TEST(DemuxResults, AtomicAndBitmaskAgree) {
  ResultTable atomic;
  atomic.columns = {"row_id", "query_id"};
  atomic.annotation_column = "query_id";
  for (auto [row, q] : std::vector<std::pair<int, int>>{{1, 3}, {1, 4}, {1, 5}, {2, 2}, {2, 3}}) {
    atomic.rows.push_back({Value(row), Value(q)});
  }
  ResultTable bits;
  bits.columns = {"row_id", "query_set"};
  bits.annotation_column = "query_set";
  bits.rows = {{Value(1), Value(std::int64_t{0b11100})}, {Value(2), Value(std::int64_t{0b00110})}};
  auto a = demux_results(atomic, 5);
  auto b = demux_results(bits, 5);
  for (std::uint32_t q = 1; q <= 5; ++q) EXPECT_EQ(a[q].rows, b[q].rows) << q;
}

TEST(DemuxResults, Errors) {
  ResultTable plain;
  plain.columns = {"x"};
  EXPECT_THROW(demux_results(plain, 1), PlanError);
  ResultTable out_of_range;
  out_of_range.columns = {"x", "query_id"};
  out_of_range.annotation_column = "query_id";
  out_of_range.rows = {{Value(1), Value(3)}};
  EXPECT_THROW(demux_results(out_of_range, 2), PlanError);
}

TEST(EquivalenceCheck, JoinQueriesFromTwoPredicates) {
  auto catalog = employees_catalog();
  auto db = small_db(50);
  ReferenceBackend backend(db);
  auto batch = batch_of({"SELECT * FROM employees E JOIN departments D ON E.dept_id = D.dept_id "
                         "WHERE E.age = 30 AND D.city = 'Basel'",
                         "SELECT * FROM employees E JOIN departments D ON E.dept_id = D.dept_id "
                         "WHERE E.name = 'Anna' AND D.address = 'Street 3'"},
                        catalog);
  auto report = equivalence_check({batch}, backend, catalog);
  EXPECT_TRUE(report.ok()) << report.to_text();
  EXPECT_EQ(report.shared_statements, 1u);
  EXPECT_EQ(report.single_statements, 2u);
}

TEST(EquivalenceCheck, SingleQueryBatch) {
  auto catalog = employees_catalog();
  auto db = small_db(50);
  ReferenceBackend backend(db);
  auto batch = batch_of({"SELECT name, age FROM employees WHERE age > 40 ORDER BY age, name LIMIT 5"}, catalog);
  EXPECT_TRUE(equivalence_check({batch}, backend, catalog).ok());
}

TEST(EquivalenceCheck, CorruptionIsReported) {
  auto catalog = employees_catalog();
  auto db = small_db(50);
  ReferenceBackend backend(db);
  auto batch = batch_of({"SELECT id FROM employees WHERE id < 10", "SELECT id FROM employees WHERE id > 40"}, catalog);
  EquivalenceConfig config;
  config.corrupt = true;
  auto report = equivalence_check({batch}, backend, catalog, config);
  EXPECT_FALSE(report.ok());
  EXPECT_EQ(report.mismatches, 1u);
  EXPECT_NE(report.to_text().find("first differing row"), std::string::npos) << report.to_text();
}

TEST(EquivalenceCheck, BackendFailureCarriesStatement) {
  auto catalog = employees_catalog();
  dq::Database empty;
  ReferenceBackend backend(empty);
  auto batch = batch_of({"SELECT id FROM employees WHERE id < 10"}, catalog);
  try {
    equivalence_check({batch}, backend, catalog);
    FAIL() << "expected BackendError";
  } catch (const BackendError& e) {
    EXPECT_NE(e.sql().find("employees"), std::string::npos);
  }
}

TEST(EquivalenceCheck, TieGroupsUnderLimit) {
  ir::QuerySpec spec = ir::parse_query("SELECT age, id FROM employees ORDER BY age LIMIT 3", employees_catalog());
  QueryResult a{{"age", "id"}, {{Value(1), Value(1)}, {Value(2), Value(2)}, {Value(2), Value(3)}}};
  QueryResult b{{"age", "id"}, {{Value(1), Value(1)}, {Value(2), Value(4)}, {Value(2), Value(3)}}};
  EXPECT_TRUE(results_equivalent(spec, a, b, 1e-9));
  QueryResult c{{"age", "id"}, {{Value(1), Value(5)}, {Value(2), Value(4)}, {Value(2), Value(3)}}};
  std::string detail;
  EXPECT_FALSE(results_equivalent(spec, a, c, 1e-9, &detail));
  EXPECT_FALSE(detail.empty());
}

/// Shared execution against query-at-a-time execution on random batches.
void random_suite(std::uint64_t seed, int batches, const std::string& dialect, sqlgen::ScanMode mode, bool nulls) {
  auto catalog = employees_catalog();
  std::mt19937_64 rng(seed);
  std::size_t queries = 0, nonempty = 0;
  for (int i = 0; i < batches; ++i) {
    std::size_t rows = 20 + rng() % 300;
    auto db = qshare::testing::random_employees_db(rng, catalog, rows, nulls);
    auto batch = qshare::testing::random_batch(rng, catalog, rows, static_cast<std::uint64_t>(i));
    ReferenceBackend backend(db, sqlgen::builtin_dialect(dialect));
    EquivalenceConfig config;
    config.split.mode = mode;
    auto report = equivalence_check({batch}, backend, catalog, config);
    ASSERT_TRUE(report.ok()) << "seed " << seed << " batch " << i << "\n" << report.to_text()
                             << ir::unparse(batch.members[0].spec);
    for (const auto& q : report.queries) {
      ++queries;
      nonempty += q.single_rows > 0;
    }
  }
  EXPECT_GT(nonempty * 2, queries);
}

TEST(EquivalenceCheck, RandomBatchesArray) { random_suite(42, 120, "reference", sqlgen::ScanMode::Linear, true); }
TEST(EquivalenceCheck, RandomBatchesBitmask) { random_suite(43, 120, "reference-bitmask", sqlgen::ScanMode::Linear, true); }
TEST(EquivalenceCheck, RandomBatchesIndexed) { random_suite(44, 80, "reference", sqlgen::ScanMode::Indexed, false); }
TEST(EquivalenceCheck, RandomBatchesIndexedBitmask) {
  random_suite(45, 80, "reference-bitmask", sqlgen::ScanMode::Indexed, false);
}

}  // namespace
}  // namespace qshare::exec
