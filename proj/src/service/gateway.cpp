#include "qshare/service/gateway.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <deque>
#include <fstream>
#include <sstream>

#include "qshare/core/json_value.hpp"
#include "qshare/core/error.hpp"

namespace qshare::service {

using nlohmann::json;

void GatewayConfig::validate() const {
  if (window.count() <= 0) throw Error("gateway window must be positive");
  if (max_batch < 1) throw Error("gateway max_batch must be at least 1");
}

GatewayConfig GatewayConfig::from_json_text(const std::string& text) {
  GatewayConfig c;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("invalid gateway config: ") + e.what());
  }
  if (j.contains("window_ms")) c.window = std::chrono::milliseconds(j["window_ms"].get<std::int64_t>());
  if (j.contains("max_batch")) c.max_batch = j["max_batch"].get<std::size_t>();
  if (j.contains("grouping")) c.grouping = ir::parse_grouping_policy(j["grouping"].get<std::string>());
  if (j.contains("dialect")) c.dialect = j["dialect"].get<std::string>();
  if (j.contains("backend")) c.backend = j["backend"].get<std::string>();
  if (j.contains("policy")) c.policy = plan::parse_split_policy(j["policy"].get<std::string>());
  if (j.contains("mode")) c.mode = sqlgen::parse_scan_mode(j["mode"].get<std::string>());
  if (j.contains("scheme")) c.pricing.kind = cost::parse_scheme_kind(j["scheme"].get<std::string>());
  if (j.contains("rate")) c.pricing.rate = j["rate"].get<double>();
  if (j.contains("min_billed_bytes")) c.pricing.min_billed_bytes = j["min_billed_bytes"].get<std::uint64_t>();
  c.validate();
  return c;
}

GatewayConfig GatewayConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read gateway config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string Reply::to_json() const {
  json j;
  j["id"] = id;
  j["ok"] = ok;
  j["columns"] = columns;
  j["rows"] = json::array();
  for (const auto& r : rows) {
    json row = json::array();
    for (const auto& v : r) row.push_back(value_to_json(v));
    j["rows"].push_back(std::move(row));
  }
  j["batch_id"] = batch_id;
  j["batch_size"] = batch_size;
  j["amortized_cost"] = amortized_cost;
  j["fallback"] = fallback;
  j["error"] = error.empty() ? json(nullptr) : json(error);
  return j.dump();
}

Submission parse_submission(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(std::string("malformed request: ") + e.what());
  }
  if (!j.is_object() || !j.contains("id") || !j.contains("sql") || !j["sql"].is_string()) {
    throw Error("request needs string fields id and sql");
  }
  Submission s;
  s.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
  s.sql = j["sql"].get<std::string>();
  if (j.contains("bindings")) {
    for (const auto& b : j["bindings"]) s.bindings.push_back(value_from_json(b));
  }
  return s;
}

Gateway::Gateway(GatewayConfig config, ir::Catalog catalog, cost::TableStats stats,
                 std::shared_ptr<exec::BackendAdapter> backend)
    : config_(std::move(config)), catalog_(std::move(catalog)), stats_(std::move(stats)), backend_(std::move(backend)) {
  config_.validate();
  timer_ = std::thread([this] { timer_loop(); });
}

Gateway::~Gateway() { stop(); }

std::uint64_t Gateway::group_key(const ir::QuerySpec& spec) const {
  return config_.grouping == ir::GroupingPolicy::Global ? 0 : ir::extract_template(spec).template_id;
}

std::future<Reply> Gateway::submit(Submission submission) {
  auto p = std::make_shared<Pending>();
  p->submission = std::move(submission);
  p->arrived = std::chrono::steady_clock::now();
  auto future = p->promise.get_future();
  bool parsed = false;
  std::string parse_error;
  try {
    p->spec = ir::bind_parameters(ir::parse_query(p->submission.sql, catalog_), p->submission.bindings, catalog_);
    p->parsed = parsed = true;
  } catch (const Error& e) {
    parse_error = e.what();
  }

  std::unique_lock lock(mu_);
  if (stopping_) {
    Reply r;
    r.id = p->submission.id;
    r.error = "gateway is stopping";
    p->promise.set_value(std::move(r));
    return future;
  }
  if (!parsed) {
    auto batch_id = next_batch_++;
    if (p->submission.bindings.empty()) {
      // The rewriter cannot handle it; the backend may still run it as written.
      inflight_.push_back(std::async(std::launch::async, [this, p, batch_id, parse_error] {
        execute_individually(*p, batch_id, parse_error);
      }));
    } else {
      Reply r;
      r.id = p->submission.id;
      r.error = parse_error;
      p->promise.set_value(std::move(r));
    }
    return future;
  }
  auto key = group_key(p->spec);
  auto& group = pending_[key];
  group.push_back(p);
  if (group.size() >= config_.max_batch) {
    Group full = std::move(group);
    pending_.erase(key);
    launch(std::move(full));
  } else if (group.size() == 1) {
    cv_.notify_all();
  }
  return future;
}

void Gateway::launch(Group group) {
  inflight_.remove_if([](std::future<void>& f) {
    return f.wait_for(std::chrono::seconds(0)) == std::future_status::ready;
  });
  inflight_.push_back(std::async(std::launch::async, [this, g = std::move(group)]() mutable { execute(std::move(g)); }));
}

void Gateway::timer_loop() {
  std::unique_lock lock(mu_);
  while (!stopping_) {
    auto now = std::chrono::steady_clock::now();
    auto next = now + std::chrono::hours(1);
    for (auto it = pending_.begin(); it != pending_.end();) {
      auto deadline = it->second.front()->arrived + config_.window;
      if (deadline <= now) {
        Group g = std::move(it->second);
        it = pending_.erase(it);
        launch(std::move(g));
      } else {
        next = std::min(next, deadline);
        ++it;
      }
    }
    cv_.wait_until(lock, next);
  }
}

void Gateway::flush() {
  std::unique_lock lock(mu_);
  auto groups = std::move(pending_);
  pending_.clear();
  for (auto& [key, g] : groups) launch(std::move(g));
}

void Gateway::stop() {
  {
    std::unique_lock lock(mu_);
    if (stopping_ && !timer_.joinable()) return;
    auto groups = std::move(pending_);
    pending_.clear();
    for (auto& [key, g] : groups) launch(std::move(g));
    stopping_ = true;
  }
  cv_.notify_all();
  if (timer_.joinable()) timer_.join();
  std::list<std::future<void>> inflight;
  {
    std::unique_lock lock(mu_);
    inflight.swap(inflight_);
  }
  for (auto& f : inflight) f.wait();
}

GatewayStats Gateway::stats() const {
  std::lock_guard lock(stats_mu_);
  return counters_;
}

void Gateway::execute(Group group) {
  std::vector<std::pair<std::string, ir::QuerySpec>> queries;
  std::map<std::string, std::shared_ptr<Pending>> by_key;
  for (std::size_t i = 0; i < group.size(); ++i) {
    // Submission ids may repeat across clients; batch under unique keys.
    std::string key = std::to_string(i) + ":" + group[i]->submission.id;
    queries.emplace_back(key, group[i]->spec);
    by_key[key] = group[i];
  }
  auto batching = ir::group_batch(queries, config_.grouping, config_.max_batch);
  for (auto& batch : batching.batches) {
    auto batch_id = next_batch_++;
    batch.batch_id = batch_id;
    try {
      plan::SplitOptions options;
      options.policy = config_.policy;
      options.mode = config_.mode;
      auto dag = plan::build_global_plan({batch}, catalog_);
      auto script = plan::split_dag(dag, options, backend_->dialect(), catalog_, stats_);

      std::vector<double> selectivities;
      for (const auto& m : batch.members) selectivities.push_back(cost::estimate_selectivity(m.spec.predicate));
      std::vector<std::pair<std::string, dq::NodePtr>> statements;
      for (const auto& step : script.steps) statements.emplace_back(std::to_string(step.id), step.plan);
      auto report = cost::estimate_plans(statements, stats_, config_.pricing, selectivities, batch.size());

      exec::ScriptRun run;
      if (script.materialize_count() > 0 || !backend_->concurrent()) {
        std::unique_lock lock(backend_mu_);
        run = exec::run_script(script, *backend_);
      } else {
        std::shared_lock lock(backend_mu_);
        run = exec::run_script(script, *backend_);
      }
      {
        std::lock_guard lock(stats_mu_);
        ++counters_.batches;
        ++counters_.executions_per_template[batch.template_id];
      }
      std::vector<std::pair<Pending*, Reply>> replies;
      for (const auto& m : batch.members) {
        auto& p = *by_key.at(m.original_id);
        auto& result = run.results.at(m.original_id);
        Reply r;
        r.id = p.submission.id;
        r.ok = true;
        r.columns = std::move(result.columns);
        r.rows = std::move(result.rows);
        r.batch_id = batch_id;
        r.batch_size = batch.size();
        r.amortized_cost = report.amortized_cost;
        replies.emplace_back(&p, std::move(r));
      }
      for (auto& [p, r] : replies) p->promise.set_value(std::move(r));
    } catch (const Error& e) {
      for (const auto& m : batch.members) execute_individually(*by_key.at(m.original_id), batch_id, e.what());
    }
  }
}

void Gateway::execute_individually(Pending& p, std::uint64_t batch_id, const std::string& reason) {
  Reply r;
  r.id = p.submission.id;
  r.fallback = true;
  r.batch_id = batch_id;
  r.batch_size = 1;
  r.error = reason;
  try {
    std::unique_lock lock(backend_mu_, std::defer_lock);
    std::shared_lock shared(backend_mu_, std::defer_lock);
    if (backend_->concurrent()) shared.lock();
    else lock.lock();
    if (p.parsed) {
      auto result = exec::run_single(p.spec, *backend_);
      r.columns = std::move(result.columns);
      r.rows = std::move(result.rows);
    } else {
      auto table = backend_->execute(p.submission.sql);
      r.columns = table.columns;
      r.rows = std::move(table.rows);
    }
    r.ok = true;
    if (p.parsed) {
      try {
        ir::QueryBatch one{batch_id, {{ir::QueryId{1}, p.submission.id, p.spec}}, 0};
        auto single = plan::build_shared_plan(one, catalog_);
        r.amortized_cost = cost::statement_bytes(single.root, stats_, config_.pricing,
                                                 {cost::estimate_selectivity(p.spec.predicate)}) *
                           config_.pricing.rate;
      } catch (const Error&) {
        r.amortized_cost = 0;  // no estimate for this shape
      }
    }
  } catch (const Error& e) {
    r.ok = false;
    r.error = reason.empty() ? e.what() : reason + "; " + e.what();
  }
  {
    std::lock_guard lock(stats_mu_);
    ++counters_.fallbacks;
  }
  p.promise.set_value(std::move(r));
}

GatewayServer::GatewayServer(Gateway& gateway, const std::string& host, int port) : gateway_(gateway) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error("cannot create socket");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) throw Error("invalid listen address " + host);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 64) < 0) {
    ::close(listen_fd_);
    throw Error("cannot listen on " + host + ":" + std::to_string(port));
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

GatewayServer::~GatewayServer() {
  stop();
  for (auto& t : connections_) {
    if (t.joinable()) t.join();
  }
}

void GatewayServer::run() {
  while (!stopped_) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (stopped_) break;
      continue;
    }
    std::lock_guard lock(conn_mu_);
    conn_fds_.push_back(fd);
    connections_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void GatewayServer::stop() {
  if (stopped_.exchange(true)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  std::lock_guard lock(conn_mu_);
  for (int fd : conn_fds_) ::shutdown(fd, SHUT_RD);
}

namespace {

bool write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    auto n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n <= 0) return false;
    off += static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace

void GatewayServer::serve_connection(int fd) {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::future<Reply>> replies;
  bool done = false;

  std::thread writer([&] {
    for (;;) {
      std::future<Reply> next;
      {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return done || !replies.empty(); });
        if (replies.empty()) return;
        next = std::move(replies.front());
        replies.pop_front();
      }
      write_all(fd, next.get().to_json() + "\n");
    }
  });

  std::string buffer;
  char chunk[4096];
  for (;;) {
    auto n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t pos;
    while ((pos = buffer.find('\n')) != std::string::npos) {
      std::string line = buffer.substr(0, pos);
      buffer.erase(0, pos + 1);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::future<Reply> f;
      try {
        f = gateway_.submit(parse_submission(line));
      } catch (const Error& e) {
        std::promise<Reply> p;
        Reply r;
        r.error = e.what();
        p.set_value(std::move(r));
        f = p.get_future();
      }
      std::lock_guard lock(mu);
      replies.push_back(std::move(f));
      cv.notify_all();
    }
  }
  {
    std::lock_guard lock(mu);
    done = true;
  }
  cv.notify_all();
  writer.join();
  ::close(fd);
}

}  // namespace qshare::service
