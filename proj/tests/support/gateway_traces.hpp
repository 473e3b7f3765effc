#pragma once

#include <chrono>
#include <future>
#include <string>
#include <thread>
#include <vector>

#include "qshare/exec/equivalence.hpp"
#include "qshare/service/gateway.hpp"

namespace qshare::testing {

struct TraceEvent {
  std::chrono::milliseconds at{0};
  service::Submission submission;
};

struct TraceOutcome {
  std::vector<service::Reply> replies;  // in trace order
  std::size_t mismatches = 0;
  std::string first_mismatch;
};

/// Submits every event at its offset, waits for all replies and compares each one with direct
/// execution of the same query.
inline TraceOutcome replay_trace(service::Gateway& gateway, const std::vector<TraceEvent>& trace,
                                 exec::BackendAdapter& direct, const ir::Catalog& catalog) {
  auto start = std::chrono::steady_clock::now();
  std::vector<std::future<service::Reply>> futures;
  for (const auto& e : trace) {
    std::this_thread::sleep_until(start + e.at);
    futures.push_back(gateway.submit(e.submission));
  }
  TraceOutcome out;
  for (std::size_t i = 0; i < futures.size(); ++i) {
    auto reply = futures[i].get();
    const auto& sub = trace[i].submission;
    auto spec = ir::bind_parameters(ir::parse_query(sub.sql, catalog), sub.bindings, catalog);
    auto expected = exec::run_single(spec, direct);
    std::string detail;
    bool equal = reply.ok && exec::results_equivalent(spec, {reply.columns, reply.rows}, expected, 1e-9, &detail);
    if (!equal) {
      if (out.mismatches++ == 0) out.first_mismatch = sub.id + ": " + (reply.ok ? detail : reply.error);
    }
    out.replies.push_back(std::move(reply));
  }
  return out;
}

inline std::vector<TraceEvent> burst_trace(const std::vector<ir::QueryRecord>& records) {
  std::vector<TraceEvent> out;
  for (const auto& r : records) out.push_back({std::chrono::milliseconds(0), {r.id, r.sql, r.bindings}});
  return out;
}

inline std::vector<TraceEvent> trickle_trace(const std::vector<ir::QueryRecord>& records, std::chrono::milliseconds gap) {
  std::vector<TraceEvent> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    out.push_back({gap * static_cast<int>(i), {records[i].id, records[i].sql, records[i].bindings}});
  }
  return out;
}

/// Round-robin over the templates with a small spacing.
inline std::vector<TraceEvent> mixed_trace(const std::vector<std::vector<ir::QueryRecord>>& per_template,
                                           std::chrono::milliseconds gap) {
  std::vector<TraceEvent> out;
  std::size_t longest = 0;
  for (const auto& t : per_template) longest = std::max(longest, t.size());
  for (std::size_t i = 0; i < longest; ++i) {
    for (const auto& t : per_template) {
      if (i >= t.size()) continue;
      out.push_back({gap * static_cast<int>(out.size()), {t[i].id, t[i].sql, t[i].bindings}});
    }
  }
  return out;
}

}  // namespace qshare::testing
