#include "qshare/exec/backend.hpp"

#include <algorithm>

#include "qshare/core/error.hpp"

namespace qshare::exec {

ReferenceBackend::ReferenceBackend(const dq::Database& db, sqlgen::DialectProfile dialect)
    : dialect_(std::move(dialect)), engine_(db) {}

ResultTable ReferenceBackend::execute(const std::string& sql) {
  ++executed_;
  try {
    return engine_.execute(sql);
  } catch (const BackendError&) {
    throw;
  } catch (const Error& e) {
    throw BackendError(e.what(), sql);
  }
}

void ReferenceBackend::create_temp(const std::string& name, const ResultTable& table) {
  if (engine_.has_table(name)) throw BackendError("table '" + name + "' already exists", "");
  engine_.add_table(name, table);
}

void ReferenceBackend::drop_temp(const std::string& name) {
  try {
    engine_.drop_table(name);
  } catch (const Error& e) {
    throw BackendError(e.what(), "");
  }
}

std::map<std::uint32_t, ResultTable> demux_results(const ResultTable& shared, std::size_t batch_size) {
  if (shared.annotation_column.empty() || shared.columns.empty() ||
      shared.columns.back() != shared.annotation_column) {
    throw PlanError("shared result has no trailing annotation column");
  }
  std::size_t ann = shared.columns.size() - 1;
  std::map<std::uint32_t, ResultTable> out;
  for (std::uint32_t q = 1; q <= batch_size; ++q) {
    auto& t = out[q];
    t.columns.assign(shared.columns.begin(), shared.columns.end() - 1);
    if (shared.types.size() == shared.columns.size()) t.types.assign(shared.types.begin(), shared.types.end() - 1);
  }
  auto deliver = [&](std::int64_t q, const Row& row) {
    if (q < 1 || static_cast<std::size_t>(q) > batch_size) {
      throw PlanError("annotation names query " + std::to_string(q) + " outside the batch of " +
                      std::to_string(batch_size));
    }
    out[static_cast<std::uint32_t>(q)].rows.emplace_back(row.begin(), row.end() - 1);
  };
  for (const auto& row : shared.rows) {
    const Value& a = row[ann];
    if (a.is_null()) continue;
    if (shared.annotation_column == "query_id") {
      deliver(a.as_int(), row);
    } else if (a.is_array()) {
      for (auto q : a.as_array()) deliver(q, row);
    } else {
      auto mask = static_cast<std::uint64_t>(a.as_int());
      for (std::uint32_t bit = 0; bit < 64; ++bit) {
        if (mask & (std::uint64_t{1} << bit)) deliver(bit + 1, row);
      }
    }
  }
  return out;
}

ScriptRun run_script(const plan::ExecutionScript& script, BackendAdapter& backend) {
  ScriptRun run;
  auto cleanup = [&] {
    for (const auto& t : run.temp_tables) {
      try {
        backend.drop_temp(t);
      } catch (const Error&) {
      }
    }
  };
  try {
    for (const auto& step : script.steps) {
      ResultTable result = backend.execute(step.sql);
      ++run.statements;
      if (step.kind == plan::ScriptStep::Kind::Materialize) {
        result.columns = step.columns;
        backend.create_temp(step.temp_name, result);
        run.temp_tables.push_back(step.temp_name);
        continue;
      }
      const auto& sink = script.sinks[step.sink];
      result.columns = step.columns;
      result.annotation_column = step.columns.back();
      auto parts = demux_results(result, sink.size());
      for (std::size_t i = 0; i < sink.size(); ++i) {
        QueryResult qr;
        qr.columns = sink.output_names;
        qr.rows = std::move(parts[static_cast<std::uint32_t>(i + 1)].rows);
        const auto& spec = sink.specs[i];
        if (qr.rows.empty() && spec.limit.value_or(1) != 0) {
          if (auto row = dq::empty_group_row(spec)) qr.rows.push_back(*row);
        }
        run.results[sink.original_ids[i]] = std::move(qr);
      }
    }
  } catch (...) {
    cleanup();
    throw;
  }
  cleanup();
  return run;
}

QueryResult run_single(const ir::QuerySpec& spec, BackendAdapter& backend) {
  auto result = backend.execute(ir::unparse(spec));
  QueryResult out;
  out.columns = plan::output_names(spec);
  out.rows = std::move(result.rows);
  return out;
}

}  // namespace qshare::exec
