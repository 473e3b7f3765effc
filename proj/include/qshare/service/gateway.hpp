#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <future>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include "qshare/cost/cost_model.hpp"
#include "qshare/exec/backend.hpp"
#include "qshare/ir/batch.hpp"
#include "qshare/plan/shared_plan.hpp"

namespace qshare::service {

struct GatewayConfig {
  std::chrono::milliseconds window{50};
  std::size_t max_batch = 16;
  ir::GroupingPolicy grouping = ir::GroupingPolicy::PerTemplate;
  std::string dialect = "reference";
  std::string backend = "reference";
  plan::SplitPolicy policy = plan::SplitPolicy::Heuristic;
  sqlgen::ScanMode mode = sqlgen::ScanMode::Linear;
  cost::PricingScheme pricing;

  /// Throws Error when window <= 0 or max_batch < 1.
  void validate() const;
  /// JSON object with keys window_ms, max_batch, grouping, dialect, backend, policy, mode,
  /// scheme, rate, min_billed_bytes. Missing keys keep their defaults.
  static GatewayConfig from_json_text(const std::string& text);
  static GatewayConfig load(const std::string& path);
};

struct Submission {
  std::string id;
  std::string sql;
  std::vector<Value> bindings;
};

struct Reply {
  std::string id;
  bool ok = false;
  std::vector<std::string> columns;
  std::vector<Row> rows;
  std::uint64_t batch_id = 0;
  std::size_t batch_size = 0;
  double amortized_cost = 0;
  bool fallback = false;  // executed individually
  std::string error;

  std::string to_json() const;  // one line
};

Submission parse_submission(const std::string& line);  // throws Error on malformed input

struct GatewayStats {
  std::size_t batches = 0;          // shared executions
  std::size_t fallbacks = 0;        // individual executions
  std::map<std::uint64_t, std::size_t> executions_per_template;  // template id -> shared executions
};

/// Collects submissions, flushes a group when its window elapses or it reaches max_batch, and
/// answers every submitter with its own rows.
class Gateway {
 public:
  Gateway(GatewayConfig config, ir::Catalog catalog, cost::TableStats stats,
          std::shared_ptr<exec::BackendAdapter> backend);
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  std::future<Reply> submit(Submission submission);
  /// Flushes every pending group now.
  void flush();
  /// Flushes, waits for in-flight batches and stops the timer. Later submissions fail.
  void stop();
  GatewayStats stats() const;
  const GatewayConfig& config() const { return config_; }

 private:
  struct Pending {
    Submission submission;
    ir::QuerySpec spec;
    bool parsed = false;
    std::promise<Reply> promise;
    std::chrono::steady_clock::time_point arrived;
  };
  using Group = std::vector<std::shared_ptr<Pending>>;

  void timer_loop();
  void launch(Group group);  // mu_ held
  void execute(Group group);
  void execute_individually(Pending& p, std::uint64_t batch_id, const std::string& reason);
  std::uint64_t group_key(const ir::QuerySpec& spec) const;

  GatewayConfig config_;
  ir::Catalog catalog_;
  cost::TableStats stats_;
  std::shared_ptr<exec::BackendAdapter> backend_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::uint64_t, Group> pending_;
  std::list<std::future<void>> inflight_;
  bool stopping_ = false;
  std::thread timer_;

  std::shared_mutex backend_mu_;  // exclusive for scripts with temps or a serial backend
  std::atomic<std::uint64_t> next_batch_{1};
  mutable std::mutex stats_mu_;
  GatewayStats counters_;
};

/// Newline-delimited JSON over TCP: one submission per line in, one reply per line out, in
/// submission order per connection.
class GatewayServer {
 public:
  /// Binds immediately; port 0 picks a free port.
  GatewayServer(Gateway& gateway, const std::string& host = "127.0.0.1", int port = 0);
  ~GatewayServer();

  int port() const { return port_; }
  /// Accepts connections until stop().
  void run();
  void stop();

 private:
  void serve_connection(int fd);

  Gateway& gateway_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> stopped_{false};
  std::mutex conn_mu_;
  std::vector<std::thread> connections_;
  std::vector<int> conn_fds_;
};

}  // namespace qshare::service
