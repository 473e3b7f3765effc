#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <json.hpp>
#include <set>

#include "gateway_traces.hpp"
#include "qshare/core/error.hpp"
#include "qshare/workload/workload.hpp"
#include "test_support.hpp"

namespace qshare::service {
namespace {

using namespace std::chrono_literals;

struct Desk {
  workload::WorkloadSpec spec;
  ir::Catalog catalog;
  dq::Database db;
  std::shared_ptr<exec::ReferenceBackend> backend;

  explicit Desk(std::size_t instances = 10) {
    spec.scale_factor = 1500 / 6e6;
    spec.instances = instances;
    catalog = workload::workload_catalog(spec);
    db = workload::generate_database(spec, catalog);
    backend = std::make_shared<exec::ReferenceBackend>(db);
  }

  std::vector<ir::QueryRecord> records(workload::TemplateKind kind) const {
    auto s = spec;
    s.templates = {kind};
    return workload::generate_queries(s);
  }

  std::unique_ptr<Gateway> gateway(GatewayConfig config) const {
    return std::make_unique<Gateway>(config, catalog, cost::TableStats::from_catalog(catalog), backend);
  }
};

GatewayConfig config(std::chrono::milliseconds window, std::size_t max_batch) {
  GatewayConfig c;
  c.window = window;
  c.max_batch = max_batch;
  return c;
}

TEST(Gateway, OneWindowOneExecution) {
  Desk desk;
  auto gw = desk.gateway(config(200ms, 64));
  auto out = testing::replay_trace(*gw, testing::burst_trace(desk.records(workload::TemplateKind::Q6)), *desk.backend,
                                   desk.catalog);
  EXPECT_EQ(out.mismatches, 0u) << out.first_mismatch;
  ASSERT_EQ(out.replies.size(), 10u);
  EXPECT_EQ(gw->stats().batches, 1u);
  for (const auto& r : out.replies) {
    EXPECT_TRUE(r.ok);
    EXPECT_EQ(r.batch_size, 10u);
    EXPECT_FALSE(r.fallback);
    EXPECT_EQ(r.batch_id, out.replies[0].batch_id);
    EXPECT_GT(r.amortized_cost, 0);
  }
}

TEST(Gateway, SizeTriggerFlushesEarly) {
  Desk desk;
  auto gw = desk.gateway(config(300ms, 4));
  auto out = testing::replay_trace(*gw, testing::burst_trace(desk.records(workload::TemplateKind::Search)),
                                   *desk.backend, desk.catalog);
  EXPECT_EQ(out.mismatches, 0u) << out.first_mismatch;
  // Two size-triggered batches of 4, then the window flushes the last 2.
  EXPECT_EQ(gw->stats().batches, 3u);
  std::map<std::uint64_t, std::size_t> sizes;
  for (const auto& r : out.replies) sizes[r.batch_id] = r.batch_size;
  std::multiset<std::size_t> got;
  for (const auto& [id, n] : sizes) got.insert(n);
  EXPECT_EQ(got, (std::multiset<std::size_t>{2, 4, 4}));
}

TEST(Gateway, WindowElapsesForASingleQuery) {
  Desk desk;
  auto gw = desk.gateway(config(30ms, 16));
  auto records = desk.records(workload::TemplateKind::Q1);
  records.resize(1);
  auto start = std::chrono::steady_clock::now();
  auto out = testing::replay_trace(*gw, testing::burst_trace(records), *desk.backend, desk.catalog);
  EXPECT_GE(std::chrono::steady_clock::now() - start, 30ms);
  EXPECT_EQ(out.mismatches, 0u) << out.first_mismatch;
  EXPECT_EQ(out.replies[0].batch_size, 1u);
}

TEST(Gateway, MixedTemplatesBatchSeparately) {
  Desk desk(6);
  auto gw = desk.gateway(config(100ms, 16));
  auto trace = testing::mixed_trace(
      {desk.records(workload::TemplateKind::Q6), desk.records(workload::TemplateKind::Q3),
       desk.records(workload::TemplateKind::Search)},
      1ms);
  auto out = testing::replay_trace(*gw, trace, *desk.backend, desk.catalog);
  EXPECT_EQ(out.mismatches, 0u) << out.first_mismatch;
  auto stats = gw->stats();
  EXPECT_EQ(stats.executions_per_template.size(), 3u);
  for (const auto& [t, n] : stats.executions_per_template) EXPECT_EQ(n, 1u);
}

TEST(Gateway, RewriteFailureFallsBack) {
  Desk desk;
  auto dialect = sqlgen::builtin_dialect("reference");
  dialect.max_query_bytes = 300;
  auto backend = std::make_shared<exec::ReferenceBackend>(desk.db, dialect);
  Gateway gw(config(20ms, 16), desk.catalog, cost::TableStats::from_catalog(desk.catalog), backend);
  auto out = testing::replay_trace(gw, testing::burst_trace(desk.records(workload::TemplateKind::Q6)), *desk.backend,
                                   desk.catalog);
  EXPECT_EQ(out.mismatches, 0u) << out.first_mismatch;
  for (const auto& r : out.replies) {
    EXPECT_TRUE(r.fallback);
    EXPECT_NE(r.error.find("limit"), std::string::npos) << r.error;
  }
  EXPECT_EQ(gw.stats().fallbacks, 10u);
}

TEST(Gateway, UnsupportedStatementRunsAsWritten) {
  Desk desk;
  auto gw = desk.gateway(config(20ms, 16));
  auto reply = gw->submit({"x", "SELECT 1", {}}).get();
  EXPECT_TRUE(reply.ok) << reply.error;
  EXPECT_TRUE(reply.fallback);
  ASSERT_EQ(reply.rows.size(), 1u);
  auto bad = gw->submit({"y", "SELECT * FROM nowhere WHERE a = ?", {Value(1)}}).get();
  EXPECT_FALSE(bad.ok);
  EXPECT_FALSE(bad.error.empty());
}

TEST(Gateway, ConfigValidation) {
  EXPECT_THROW(GatewayConfig::from_json_text(R"({"window_ms": 0})"), Error);
  EXPECT_THROW(GatewayConfig::from_json_text(R"({"max_batch": 0})"), Error);
  auto c = GatewayConfig::from_json_text(
      R"({"window_ms": 5, "max_batch": 8, "grouping": "global", "policy": "always-duplicate", "scheme": "bytes-scanned"})");
  EXPECT_EQ(c.window, 5ms);
  EXPECT_EQ(c.max_batch, 8u);
  EXPECT_EQ(c.grouping, ir::GroupingPolicy::Global);
  EXPECT_EQ(c.policy, plan::SplitPolicy::AlwaysDuplicate);
  EXPECT_EQ(c.pricing.kind, cost::SchemeKind::BytesScanned);
}

TEST(Gateway, ReplyJson) {
  Reply r;
  r.id = "a";
  r.ok = true;
  r.columns = {"x"};
  r.rows = {{Value(1)}, {Value()}};
  r.batch_id = 3;
  r.batch_size = 2;
  auto j = nlohmann::json::parse(r.to_json());
  for (const auto* k : {"id", "ok", "columns", "rows", "batch_id", "batch_size", "amortized_cost", "fallback", "error"}) {
    EXPECT_TRUE(j.contains(k)) << k;
  }
  EXPECT_TRUE(j["rows"][1][0].is_null());
  EXPECT_THROW(parse_submission("{\"sql\": 1}"), Error);
  auto s = parse_submission(R"({"id": 7, "sql": "SELECT 1", "bindings": [1, "a", null]})");
  EXPECT_EQ(s.id, "7");
  EXPECT_EQ(s.bindings.size(), 3u);
}

std::string read_line(int fd, std::string& buffer) {
  char chunk[4096];
  while (buffer.find('\n') == std::string::npos) {
    auto n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n <= 0) return "";
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
  auto pos = buffer.find('\n');
  auto line = buffer.substr(0, pos);
  buffer.erase(0, pos + 1);
  return line;
}

TEST(GatewayServer, NdjsonOverTcp) {
  Desk desk(3);
  auto gw = desk.gateway(config(20ms, 16));
  GatewayServer server(*gw);
  std::thread loop([&] { server.run(); });

  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(server.port()));
  ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
  ASSERT_EQ(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
  std::string request;
  for (const auto& r : desk.records(workload::TemplateKind::Q6)) {
    nlohmann::json j;
    j["id"] = r.id;
    j["sql"] = r.sql;
    j["bindings"] = nlohmann::json::array();
    for (const auto& b : r.bindings) j["bindings"].push_back(b.is_int() ? nlohmann::json(b.as_int()) : nlohmann::json(b.as_double()));
    request += j.dump() + "\n";
  }
  request += "not json\n";
  ASSERT_EQ(::send(fd, request.data(), request.size(), 0), static_cast<ssize_t>(request.size()));
  std::string buffer;
  std::vector<nlohmann::json> replies;
  for (int i = 0; i < 4; ++i) replies.push_back(nlohmann::json::parse(read_line(fd, buffer)));
  EXPECT_EQ(replies[0]["id"], "q6_001");
  EXPECT_EQ(replies[1]["id"], "q6_002");
  EXPECT_EQ(replies[2]["id"], "q6_003");
  EXPECT_TRUE(replies[0]["ok"].get<bool>());
  EXPECT_EQ(replies[0]["batch_size"], 3);
  EXPECT_FALSE(replies[3]["ok"].get<bool>());
  ::close(fd);
  server.stop();
  loop.join();
}

}  // namespace
}  // namespace qshare::service
