#include "qshare/ir/batch.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "qshare/core/error.hpp"
#include "qshare/core/json_value.hpp"

namespace qshare::ir {

using nlohmann::json;

int query_id_width(std::size_t batch_size) {
  if (batch_size <= 0xFF) return 8;
  if (batch_size <= 0xFFFF) return 16;
  if (batch_size <= 0xFFFFFFFFULL) return 32;
  return 64;
}


Value value_from_json_text(const std::string& text) { return value_from_json(json::parse(text)); }

std::vector<QueryRecord> parse_batch_text(const std::string& text) {
  std::vector<QueryRecord> records;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw PlanError("batch line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("sql")) {
      throw PlanError("batch line " + std::to_string(line_no) + ": expected an object with \"sql\"");
    }
    QueryRecord r;
    if (j.contains("id")) {
      r.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
    } else {
      r.id = std::to_string(records.size() + 1);
    }
    r.sql = j["sql"].get<std::string>();
    if (j.contains("bindings")) {
      for (const auto& b : j["bindings"]) r.bindings.push_back(value_from_json(b));
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<QueryRecord> read_batch_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PlanError("cannot open batch file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_batch_text(ss.str());
}

std::string to_batch_text(const std::vector<QueryRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    json j;
    j["id"] = r.id;
    j["sql"] = r.sql;
    if (!r.bindings.empty()) {
      j["bindings"] = json::array();
      for (const auto& b : r.bindings) j["bindings"].push_back(value_to_json(b));
    }
    out += j.dump() + "\n";
  }
  return out;
}

const BatchMember& QueryBatch::member(QueryId id) const {
  if (id.value < 1 || id.value > members.size()) {
    throw PlanError("query id " + std::to_string(id.value) + " is outside batch of " +
                    std::to_string(members.size()));
  }
  return members[id.value - 1];
}

std::string_view to_string(GroupingPolicy policy) {
  return policy == GroupingPolicy::PerTemplate ? "per-template" : "global";
}

GroupingPolicy parse_grouping_policy(std::string_view name) {
  if (name == "per-template") return GroupingPolicy::PerTemplate;
  if (name == "global") return GroupingPolicy::Global;
  throw PlanError("unknown grouping policy '" + std::string(name) + "'");
}

Batching group_batch(const std::vector<std::pair<std::string, QuerySpec>>& queries,
                     GroupingPolicy policy, std::size_t max_size) {
  if (max_size < 1) throw PlanError("max batch size must be at least 1");
  std::set<std::string> seen;
  for (const auto& [id, spec] : queries) {
    if (!seen.insert(id).second) throw PlanError("duplicate query id '" + id + "'");
  }

  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::uint64_t> group_templates;
  if (policy == GroupingPolicy::PerTemplate) {
    std::unordered_map<std::uint64_t, std::size_t> by_template;
    for (std::size_t i = 0; i < queries.size(); ++i) {
      auto t = extract_template(queries[i].second).template_id;
      auto [it, fresh] = by_template.emplace(t, groups.size());
      if (fresh) {
        groups.emplace_back();
        group_templates.push_back(t);
      }
      groups[it->second].push_back(i);
    }
  } else if (!queries.empty()) {
    groups.emplace_back();
    group_templates.push_back(0);
    for (std::size_t i = 0; i < queries.size(); ++i) groups[0].push_back(i);
  }

  Batching out;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& idx = groups[g];
    for (std::size_t start = 0; start < idx.size(); start += max_size) {
      QueryBatch batch;
      batch.batch_id = out.batches.size();
      std::size_t end = std::min(idx.size(), start + max_size);
      std::set<std::uint64_t> templates;
      for (std::size_t k = start; k < end; ++k) {
        const auto& [orig, spec] = queries[idx[k]];
        BatchMember m;
        m.id = QueryId{static_cast<std::uint32_t>(k - start + 1)};
        m.original_id = orig;
        m.spec = spec;
        templates.insert(extract_template(spec).template_id);
        out.placement[orig] = Placement{out.batches.size(), m.id};
        batch.members.push_back(std::move(m));
      }
      batch.template_id = templates.size() == 1 ? *templates.begin() : 0;
      out.batches.push_back(std::move(batch));
    }
  }
  return out;
}

std::vector<std::pair<std::string, QuerySpec>> parse_records(const std::vector<QueryRecord>& records,
                                                             const Catalog& catalog) {
  std::vector<std::pair<std::string, QuerySpec>> out;
  for (const auto& r : records) {
    out.emplace_back(r.id, bind_parameters(parse_query(r.sql, catalog), r.bindings, catalog));
  }
  return out;
}

}  // namespace qshare::ir
