#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "qshare/core/error.hpp"
#include "qshare/core/json_value.hpp"
#include "qshare/cost/cost_model.hpp"
#include "qshare/exec/equivalence.hpp"
#include "qshare/service/gateway.hpp"
#include "qshare/workload/workload.hpp"

using namespace qshare;

namespace {

constexpr int kFailure = 1;
constexpr int kUsage = 2;

struct UsageFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string batch_file;
  std::string catalog = "catalog.json";
  std::string dialect = "reference";
  std::string mode = "linear";
  std::string policy = "heuristic";
  std::string grouping = "per-template";
  std::size_t max_batch = 128;
  bool global = false;
};

void add_plan_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--catalog", c.catalog, "Catalog JSON file")->capture_default_str();
  cmd->add_option("--dialect", c.dialect, "Dialect name or profile JSON file")->capture_default_str();
  cmd->add_option("--mode", c.mode, "Annotation computation: linear or indexed")->capture_default_str();
  cmd->add_option("--policy", c.policy, "DAG split policy: heuristic, always-duplicate, always-materialize")
      ->capture_default_str();
  cmd->add_option("--grouping", c.grouping, "Batch grouping: per-template or global")->capture_default_str();
  cmd->add_option("--max-batch", c.max_batch, "Largest batch")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_flag("--global", c.global, "Share scan/join cores across batches");
}

sqlgen::DialectProfile load_dialect(const std::string& name) {
  if (std::filesystem::exists(name)) return sqlgen::DialectProfile::load(name);
  return sqlgen::builtin_dialect(name);
}

std::vector<ir::QueryBatch> load_batches(const Common& c, const ir::Catalog& catalog) {
  auto records = ir::read_batch_file(c.batch_file);
  if (records.empty()) throw UsageFailure("batch file " + c.batch_file + " holds no queries");
  auto queries = ir::parse_records(records, catalog);
  return ir::group_batch(queries, ir::parse_grouping_policy(c.grouping), c.max_batch).batches;
}

plan::ExecutionScript make_script(const Common& c, const std::vector<ir::QueryBatch>& batches,
                                  const ir::Catalog& catalog, const sqlgen::DialectProfile& dialect) {
  plan::SplitOptions options;
  options.policy = plan::parse_split_policy(c.policy);
  options.mode = sqlgen::parse_scan_mode(c.mode);
  auto stats = cost::TableStats::from_catalog(catalog);
  if (c.global) return plan::split_dag(plan::build_global_plan(batches, catalog), options, dialect, catalog, stats);
  plan::ExecutionScript all;
  for (const auto& b : batches) {
    auto script = plan::split_dag(plan::build_global_plan({b}, catalog), options, dialect, catalog, stats);
    all.dialect = script.dialect;
    all.mode = script.mode;
    std::size_t base = all.steps.size();
    std::size_t sink_base = all.sinks.size();
    for (auto& s : script.steps) {
      s.id += base;
      s.sink += sink_base;
      for (auto& d : s.depends_on) d += base;
      all.steps.push_back(std::move(s));
    }
    for (auto& s : script.sinks) all.sinks.push_back(std::move(s));
  }
  return all;
}

nlohmann::json rows_json(const std::vector<Row>& rows) {
  auto out = nlohmann::json::array();
  for (const auto& r : rows) {
    auto row = nlohmann::json::array();
    for (const auto& v : r) row.push_back(value_to_json(v));
    out.push_back(std::move(row));
  }
  return out;
}

int cmd_rewrite(const Common& c, const std::string& format, const std::string& out_path) {
  auto catalog = ir::Catalog::load(c.catalog);
  auto dialect = load_dialect(c.dialect);
  auto script = make_script(c, load_batches(c, catalog), catalog, dialect);
  std::ostringstream text;
  if (format == "json") {
    text << script.to_json() << "\n";
  } else {
    for (const auto& s : script.steps) {
      bool run = s.kind == plan::ScriptStep::Kind::Run;
      text << "-- step " << s.id << (run ? " run" : " materialize " + s.temp_name) << "\n" << s.sql << ";\n\n";
    }
  }
  if (out_path.empty()) std::cout << text.str();
  else std::ofstream(out_path) << text.str();
  bool within = true;
  for (const auto& s : script.steps) {
    bool ok = s.sql.size() < dialect.max_query_bytes;
    within = within && ok;
    std::cerr << "step " << s.id << ": " << s.sql.size() << " bytes, limit " << dialect.max_query_bytes << ": "
              << (ok ? "within limit" : "over limit") << "\n";
  }
  return within ? 0 : kFailure;
}

exec::ReferenceBackend make_backend(const std::string& data_dir, const ir::Catalog& catalog,
                                    const sqlgen::DialectProfile& dialect) {
  if (data_dir.empty()) throw UsageFailure("--data is required");
  return exec::ReferenceBackend(dq::load_database(data_dir, catalog), dialect);
}

int cmd_check(Common c, const std::string& data_dir, bool corrupt, std::size_t random, std::uint64_t seed) {
  ir::Catalog catalog;
  std::vector<ir::QueryBatch> batches;
  std::optional<dq::Database> db;
  if (random > 0) {
    // Seeded desk workload: generated data and every template with `random` instances.
    workload::WorkloadSpec spec;
    spec.instances = random;
    spec.seed = seed;
    catalog = workload::workload_catalog(spec);
    db = workload::generate_database(spec, catalog);
    batches = ir::group_batch(ir::parse_records(workload::generate_queries(spec), catalog),
                              ir::parse_grouping_policy(c.grouping), std::min<std::size_t>(c.max_batch, 16))
                  .batches;
  } else {
    catalog = ir::Catalog::load(c.catalog);
    if (data_dir.empty()) throw UsageFailure("--data is required");
    db = dq::load_database(data_dir, catalog);
    batches = load_batches(c, catalog);
  }
  exec::ReferenceBackend backend(*db, load_dialect(c.dialect));
  exec::EquivalenceConfig config;
  config.split.policy = plan::parse_split_policy(c.policy);
  config.split.mode = sqlgen::parse_scan_mode(c.mode);
  config.global = c.global;
  config.corrupt = corrupt;
  auto report = exec::equivalence_check(batches, backend, catalog, config);
  std::cout << report.to_text();
  std::cout << (report.ok() ? "PASS" : "FAIL") << " " << report.queries.size() << " queries, " << report.mismatches
            << " mismatches\n";
  return report.ok() ? 0 : kFailure;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoul(item));
    } catch (const std::exception&) {
      throw UsageFailure("bad batch size '" + item + "'");
    }
    if (out.back() == 0) throw UsageFailure("batch sizes must be positive");
  }
  if (out.empty()) throw UsageFailure("--sizes is empty");
  return out;
}

int cmd_cost(const Common& c, const std::string& stats_path, const std::string& scheme, double rate,
             std::uint64_t rows_per_block, double selectivity, const std::string& sizes_text) {
  auto catalog = ir::Catalog::load(c.catalog);
  if (stats_path.empty()) throw UsageFailure("--stats is required");
  if (!std::filesystem::exists(stats_path)) throw Error("statistics file " + stats_path + " does not exist");
  auto stats = cost::TableStats::load(stats_path);
  auto records = ir::read_batch_file(c.batch_file);
  if (records.empty()) throw UsageFailure("batch file " + c.batch_file + " holds no queries");
  auto queries = ir::parse_records(records, catalog);
  // The sweep uses the instances of the first template in the file.
  auto first = ir::extract_template(queries.front().second).template_id;
  std::vector<std::pair<std::string, ir::QuerySpec>> same;
  for (const auto& q : queries) {
    if (ir::extract_template(q.second).template_id == first) same.push_back(q);
  }
  auto sizes = parse_sizes(sizes_text);
  for (auto n : sizes) {
    if (n > same.size()) {
      throw UsageFailure("batch size " + std::to_string(n) + " exceeds the " + std::to_string(same.size()) +
                         " instances of the first template");
    }
  }
  auto plan_for = [&](std::size_t n) {
    std::vector<std::pair<std::string, ir::QuerySpec>> prefix(same.begin(), same.begin() + static_cast<long>(n));
    auto batch = ir::group_batch(prefix, ir::GroupingPolicy::PerTemplate, n).batches.at(0);
    return plan::build_shared_plan(batch, catalog).root;
  };
  cost::PricingScheme pricing;
  pricing.kind = cost::parse_scheme_kind(scheme);
  pricing.rate = rate;
  pricing.rows_per_block = rows_per_block;
  auto cmp = cost::compare_batch_vs_qat(sizes, plan_for, plan_for(1), selectivity, stats, pricing);
  std::cout << cmp.to_text();
  return 0;
}

int cmd_run(const Common& c, const std::string& data_dir) {
  auto catalog = ir::Catalog::load(c.catalog);
  auto dialect = load_dialect(c.dialect);
  auto backend = make_backend(data_dir, catalog, dialect);
  auto script = make_script(c, load_batches(c, catalog), catalog, dialect);
  auto run = exec::run_script(script, backend);
  for (const auto& record : ir::read_batch_file(c.batch_file)) {
    const auto& r = run.results.at(record.id);
    nlohmann::json j;
    j["id"] = record.id;
    j["columns"] = r.columns;
    j["rows"] = rows_json(r.rows);
    std::cout << j.dump() << "\n";
  }
  std::cerr << run.statements << " statements executed\n";
  return 0;
}

std::vector<workload::TemplateKind> parse_templates(const std::string& text) {
  std::vector<workload::TemplateKind> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(workload::parse_template(item));
  return out;
}

int cmd_gen_workload(const std::string& out_dir, double scale, std::size_t instances, const std::string& templates,
                     std::uint64_t seed) {
  workload::WorkloadSpec spec;
  spec.scale_factor = scale;
  spec.instances = instances;
  spec.templates = parse_templates(templates);
  spec.seed = seed;
  workload::generate_data(spec, out_dir);
  std::ofstream(out_dir + "/queries.jsonl") << ir::to_batch_text(workload::generate_queries(spec));
  auto sizes = workload::table_sizes(spec);
  std::cout << "lineitem " << sizes.lineitem << ", orders " << sizes.orders << ", customer " << sizes.customer
            << " rows; " << spec.templates.size() * instances << " queries in " << out_dir << "/queries.jsonl\n";
  return 0;
}

service::GatewayServer* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server) g_server->stop();
}

int cmd_serve(const std::string& config_path, const std::string& catalog_path, const std::string& data_dir,
              const std::string& host, int port) {
  service::GatewayConfig config;
  if (!config_path.empty()) config = service::GatewayConfig::load(config_path);
  if (config.backend != "reference") throw Error("unknown backend '" + config.backend + "'");
  auto catalog = ir::Catalog::load(catalog_path);
  if (data_dir.empty()) throw UsageFailure("--data is required");
  auto backend = std::make_shared<exec::ReferenceBackend>(dq::load_database(data_dir, catalog),
                                                          load_dialect(config.dialect));
  service::Gateway gateway(config, catalog, cost::TableStats::from_catalog(catalog), backend);
  service::GatewayServer server(gateway, host, port);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "listening on " << host << ":" << server.port() << "\n";
  server.run();
  gateway.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shared execution of query batches by SQL rewriting"};
  app.require_subcommand(1);

  Common common;
  std::string format = "sql", out_path, data_dir, stats_path, scheme = "columns-billed", sizes = "1,2,4,8,16,32,64,128";
  std::string templates = "q1,q3,q6,q10,search", config_path, host = "127.0.0.1";
  double rate = 5e-12, selectivity = 0.01, scale = 0.001;
  std::uint64_t rows_per_block = 1, seed = 1;
  std::size_t instances = 32, random = 0;
  bool corrupt = false;
  int port = 7878;

  auto* rewrite = app.add_subcommand("rewrite", "Render the shared execution script of a batch file");
  rewrite->add_option("batch", common.batch_file, "Newline-delimited query records")->required();
  add_plan_flags(rewrite, common);
  rewrite->add_option("--format", format, "sql or json")->check(CLI::IsMember({"sql", "json"}))->capture_default_str();
  rewrite->add_option("--out", out_path, "Write the script here instead of stdout");

  auto* check = app.add_subcommand("check", "Compare shared execution with query-at-a-time execution");
  check->add_option("batch", common.batch_file, "Newline-delimited query records");
  add_plan_flags(check, common);
  check->add_option("--data", data_dir, "Directory of <table>.tbl fixtures");
  check->add_flag("--corrupt", corrupt, "Damage the shared result before comparing");
  check->add_option("--random", random, "Check a generated desk workload with this many instances per template");
  check->add_option("--seed", seed, "Seed for --random")->capture_default_str();

  auto* cost_cmd = app.add_subcommand("cost", "Billed bytes of batched versus query-at-a-time execution");
  cost_cmd->add_option("batch", common.batch_file, "Newline-delimited query records")->required();
  cost_cmd->add_option("--catalog", common.catalog, "Catalog JSON file")->capture_default_str();
  cost_cmd->add_option("--stats", stats_path, "Statistics file (catalog JSON format)");
  cost_cmd->add_option("--scheme", scheme, "columns-billed or bytes-scanned")->capture_default_str();
  cost_cmd->add_option("--rate", rate, "Currency per billed byte")->capture_default_str();
  cost_cmd->add_option("--rows-per-block", rows_per_block, "Rows per storage block")->capture_default_str();
  cost_cmd->add_option("--selectivity", selectivity, "Per-query selectivity")->capture_default_str();
  cost_cmd->add_option("--sizes", sizes, "Comma-separated batch sizes")->capture_default_str();

  auto* run = app.add_subcommand("run", "Execute a batch file and print each query's rows");
  run->add_option("batch", common.batch_file, "Newline-delimited query records")->required();
  add_plan_flags(run, common);
  run->add_option("--data", data_dir, "Directory of <table>.tbl fixtures")->required();

  auto* gen = app.add_subcommand("gen-workload", "Write desk-scale data and query files");
  gen->add_option("--out", out_path, "Output directory")->required();
  gen->add_option("--scale", scale, "Scale factor")->capture_default_str();
  gen->add_option("--instances", instances, "Instances per template")->capture_default_str();
  gen->add_option("--templates", templates, "Comma-separated templates")->capture_default_str();
  gen->add_option("--seed", seed, "Seed")->capture_default_str();

  auto* serve = app.add_subcommand("serve", "Run the batching gateway");
  serve->add_option("--config", config_path, "Gateway config JSON");
  serve->add_option("--catalog", common.catalog, "Catalog JSON file")->capture_default_str();
  serve->add_option("--data", data_dir, "Directory of <table>.tbl fixtures")->required();
  serve->add_option("--host", host, "Listen address")->capture_default_str();
  serve->add_option("--port", port, "Listen port, 0 for any")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  try {
    if (rewrite->parsed()) return cmd_rewrite(common, format, out_path);
    if (check->parsed()) {
      if (random == 0 && common.batch_file.empty()) throw UsageFailure("check needs a batch file or --random");
      return cmd_check(common, data_dir, corrupt, random, seed);
    }
    if (cost_cmd->parsed()) return cmd_cost(common, stats_path, scheme, rate, rows_per_block, selectivity, sizes);
    if (run->parsed()) return cmd_run(common, data_dir);
    if (gen->parsed()) return cmd_gen_workload(out_path, scale, instances, templates, seed);
    if (serve->parsed()) return cmd_serve(config_path, common.catalog, data_dir, host, port);
  } catch (const UsageFailure& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const BackendError& e) {
    std::cerr << "error: " << e.what() << "\nstatement:\n" << e.sql() << "\n";
    return kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}
