#include "qshare/workload/workload.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "qshare/core/error.hpp"

namespace qshare::workload {

namespace {

using std::chrono::days;
using std::chrono::sys_days;
using std::chrono::year_month_day;

std::int64_t yyyymmdd(sys_days d) {
  year_month_day ymd{d};
  return static_cast<int>(ymd.year()) * 10000 + static_cast<unsigned>(ymd.month()) * 100 +
         static_cast<unsigned>(ymd.day());
}

sys_days ymd(int y, unsigned m, unsigned d) {
  return sys_days{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}};
}

const sys_days kStart = ymd(1992, 1, 1);
constexpr int kDateSpan = 2405;  // through 1998-08-02

const char* kFlags[] = {"A", "N", "R"};
const char* kModes[] = {"AIR", "FOB", "MAIL", "RAIL", "REG AIR", "SHIP", "TRUCK"};
const char* kSegments[] = {"AUTOMOBILE", "BUILDING", "FURNITURE", "HOUSEHOLD", "MACHINERY"};
const char* kPriorities[] = {"1-URGENT", "2-HIGH", "3-MEDIUM", "4-NOT SPECIFIED", "5-LOW"};

class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(rng_() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  template <std::size_t N>
  const char* pick(const char* (&items)[N]) {
    return items[rng_() % N];
  }
  double cents(std::int64_t lo, std::int64_t hi) { return static_cast<double>(between(lo, hi)) / 100.0; }

 private:
  std::mt19937_64 rng_;
};

std::string record_id(TemplateKind kind, std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "_%03zu", i + 1);
  return std::string(to_string(kind)) + buf;
}

std::vector<Value> bindings_for(TemplateKind kind, Draw& draw) {
  switch (kind) {
    case TemplateKind::Q1: return {Value(yyyymmdd(ymd(1998, 12, 1) - days{draw.between(60, 120)}))};
    case TemplateKind::Q3: {
      auto d = yyyymmdd(ymd(1995, 3, static_cast<unsigned>(draw.between(1, 31))));
      return {Value(std::string(draw.pick(kSegments))), Value(d), Value(d)};
    }
    case TemplateKind::Q6: {
      auto y = static_cast<int>(draw.between(1993, 1997));
      auto discount = draw.between(2, 9);
      return {Value(yyyymmdd(ymd(y, 1, 1))), Value(yyyymmdd(ymd(y + 1, 1, 1))),
              Value(static_cast<double>(discount - 1) / 100.0), Value(static_cast<double>(discount + 1) / 100.0),
              Value(draw.between(24, 25))};
    }
    case TemplateKind::Q10: {
      auto months = draw.between(0, 23);
      int y = 1993 + static_cast<int>((1 + months) / 12);
      unsigned m = static_cast<unsigned>((1 + months) % 12) + 1;
      auto start = ymd(y, m, 1);
      year_month_day end{std::chrono::year_month_day{start} + std::chrono::months{3}};
      return {Value(yyyymmdd(start)), Value(yyyymmdd(sys_days{end}))};
    }
    case TemplateKind::Search: {
      auto lo = draw.between(1, 45);
      return {Value(std::string(draw.pick(kModes))), Value(draw.between(5, 30)), Value(lo), Value(lo + draw.between(1, 5))};
    }
  }
  return {};
}

}  // namespace

std::string_view to_string(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::Q1: return "q1";
    case TemplateKind::Q3: return "q3";
    case TemplateKind::Q6: return "q6";
    case TemplateKind::Q10: return "q10";
    case TemplateKind::Search: return "search";
  }
  return "";
}

TemplateKind parse_template(std::string_view name) {
  for (auto k : all_templates()) {
    if (to_string(k) == name) return k;
  }
  throw PlanError("unknown template '" + std::string(name) + "'");
}

const std::vector<TemplateKind>& all_templates() {
  static const std::vector<TemplateKind> all = {TemplateKind::Q1, TemplateKind::Q3, TemplateKind::Q6, TemplateKind::Q10,
                                                TemplateKind::Search};
  return all;
}

TableSizes table_sizes(const WorkloadSpec& spec) {
  TableSizes s;
  s.lineitem = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(6e6 * spec.scale_factor)));
  s.orders = std::max<std::uint64_t>(1, s.lineitem / 4);
  s.customer = std::max<std::uint64_t>(1, s.orders / 10);
  return s;
}

ir::Catalog workload_catalog(const WorkloadSpec& spec) {
  auto sizes = table_sizes(spec);
  using T = LogicalType;
  ir::Catalog catalog;
  catalog.add({"lineitem",
               {{"l_orderkey", T::Int, 8},
                {"l_linenumber", T::Int, 8},
                {"l_quantity", T::Int, 8},
                {"l_extendedprice", T::Double, 8},
                {"l_discount", T::Double, 8},
                {"l_tax", T::Double, 8},
                {"l_returnflag", T::String, 1},
                {"l_linestatus", T::String, 1},
                {"l_shipdate", T::Int, 8},
                {"l_shipmode", T::String, 5},
                {"l_dense", T::Int, 8}},
               sizes.lineitem});
  catalog.add({"orders",
               {{"o_orderkey", T::Int, 8},
                {"o_custkey", T::Int, 8},
                {"o_orderdate", T::Int, 8},
                {"o_orderpriority", T::String, 8},
                {"o_totalprice", T::Double, 8},
                {"o_shippriority", T::Int, 8}},
               sizes.orders});
  catalog.add({"customer",
               {{"c_custkey", T::Int, 8},
                {"c_name", T::String, 18},
                {"c_mktsegment", T::String, 9},
                {"c_nationkey", T::Int, 8},
                {"c_acctbal", T::Double, 8}},
               sizes.customer});
  return catalog;
}

dq::Database generate_database(const WorkloadSpec& spec, const ir::Catalog& catalog) {
  auto sizes = table_sizes(spec);
  Draw draw(spec.seed);
  std::vector<Row> customers;
  for (std::uint64_t c = 1; c <= sizes.customer; ++c) {
    char name[32];
    std::snprintf(name, sizeof name, "Customer#%09llu", static_cast<unsigned long long>(c));
    customers.push_back({Value(static_cast<std::int64_t>(c)), Value(std::string(name)),
                         Value(std::string(draw.pick(kSegments))), Value(draw.between(0, 24)),
                         Value(draw.cents(-99999, 999999))});
  }
  std::vector<Row> orders;
  std::vector<std::int64_t> order_dates;
  for (std::uint64_t o = 1; o <= sizes.orders; ++o) {
    auto date = draw.between(0, kDateSpan - 151);
    order_dates.push_back(date);
    orders.push_back({Value(static_cast<std::int64_t>(o)),
                      Value(draw.between(1, static_cast<std::int64_t>(sizes.customer))),
                      Value(yyyymmdd(kStart + days{date})), Value(std::string(draw.pick(kPriorities))),
                      Value(draw.cents(100000, 50000000)), Value(std::int64_t{0})});
  }
  std::vector<Row> lines;
  std::vector<std::int64_t> line_numbers(sizes.orders + 1, 0);
  for (std::uint64_t i = 1; i <= sizes.lineitem; ++i) {
    // Every order gets its first line before any order gets a second.
    auto order = i <= sizes.orders ? static_cast<std::int64_t>(i)
                                   : draw.between(1, static_cast<std::int64_t>(sizes.orders));
    auto ship = order_dates[static_cast<std::size_t>(order - 1)] + draw.between(1, 121);
    auto quantity = draw.between(1, 50);
    lines.push_back({Value(order), Value(++line_numbers[static_cast<std::size_t>(order)]), Value(quantity),
                     Value(static_cast<double>(quantity) * draw.cents(90000, 200000)), Value(draw.cents(0, 10)),
                     Value(draw.cents(0, 8)), Value(std::string(draw.pick(kFlags))),
                     Value(std::string(ship > 1260 ? "F" : "O")), Value(yyyymmdd(kStart + days{ship})),
                     Value(std::string(draw.pick(kModes))), Value(static_cast<std::int64_t>(i))});
  }
  dq::Database db;
  db.tables["customer"] = dq::make_relation(catalog.table("customer"), std::move(customers));
  db.tables["orders"] = dq::make_relation(catalog.table("orders"), std::move(orders));
  db.tables["lineitem"] = dq::make_relation(catalog.table("lineitem"), std::move(lines));
  return db;
}

void generate_data(const WorkloadSpec& spec, const std::string& dir) {
  std::filesystem::create_directories(dir);
  auto catalog = workload_catalog(spec);
  auto db = generate_database(spec, catalog);
  for (const auto& [name, relation] : db.tables) dq::write_fixture(dir + "/" + name + ".tbl", relation);
  std::ofstream out(dir + "/catalog.json");
  out << catalog.to_json_text() << "\n";
  if (!out) throw Error("cannot write " + dir + "/catalog.json");
}

std::string template_sql(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::Q1:
      return "SELECT l_returnflag, l_linestatus, SUM(l_quantity) AS sum_qty, SUM(l_extendedprice) AS sum_base_price, "
             "SUM(l_extendedprice * (1 - l_discount)) AS sum_disc_price, AVG(l_quantity) AS avg_qty, "
             "AVG(l_discount) AS avg_disc, COUNT(*) AS count_order FROM lineitem WHERE l_shipdate <= ? "
             "GROUP BY l_returnflag, l_linestatus ORDER BY l_returnflag, l_linestatus";
    case TemplateKind::Q3:
      return "SELECT o_orderkey, o_orderdate, o_shippriority, SUM(l_extendedprice * (1 - l_discount)) AS revenue "
             "FROM customer JOIN orders ON c_custkey = o_custkey JOIN lineitem ON l_orderkey = o_orderkey "
             "WHERE c_mktsegment = ? AND o_orderdate < ? AND l_shipdate > ? "
             "GROUP BY o_orderkey, o_orderdate, o_shippriority ORDER BY revenue DESC, o_orderdate LIMIT 10";
    case TemplateKind::Q6:
      return "SELECT SUM(l_extendedprice * l_discount) AS revenue FROM lineitem "
             "WHERE l_shipdate >= ? AND l_shipdate < ? AND l_discount BETWEEN ? AND ? AND l_quantity < ?";
    case TemplateKind::Q10:
      return "SELECT c_custkey, c_name, SUM(l_extendedprice * (1 - l_discount)) AS revenue, c_acctbal "
             "FROM customer JOIN orders ON c_custkey = o_custkey JOIN lineitem ON l_orderkey = o_orderkey "
             "WHERE o_orderdate >= ? AND o_orderdate < ? AND l_returnflag = 'R' "
             "GROUP BY c_custkey, c_name, c_acctbal ORDER BY revenue DESC, c_custkey LIMIT 20";
    case TemplateKind::Search:
      return "SELECT l_orderkey, l_linenumber, l_quantity, l_shipmode FROM lineitem "
             "WHERE (l_shipmode = ? AND l_quantity < ?) OR l_quantity BETWEEN ? AND ?";
  }
  return "";
}

std::vector<ir::QueryRecord> generate_queries(const WorkloadSpec& spec) {
  Draw draw(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<ir::QueryRecord> out;
  for (auto kind : spec.templates) {
    for (std::size_t i = 0; i < spec.instances; ++i) {
      out.push_back({record_id(kind, i), template_sql(kind), bindings_for(kind, draw)});
    }
  }
  return out;
}

std::pair<std::uint64_t, std::uint64_t> dense_range(double selectivity, std::uint64_t rows, std::uint64_t lo) {
  if (selectivity < 0 || selectivity > 1) throw PlanError("selectivity must lie in [0, 1]");
  auto k = static_cast<std::uint64_t>(std::ceil(selectivity * static_cast<double>(rows)));
  k = std::clamp<std::uint64_t>(k, 1, rows);
  lo = std::clamp<std::uint64_t>(lo, 1, rows - k + 1);
  return {lo, lo + k - 1};
}

std::vector<ir::QueryRecord> dense_scan_queries(std::size_t count, double selectivity, std::uint64_t rows,
                                                std::uint64_t seed) {
  Draw draw(seed);
  std::vector<ir::QueryRecord> out;
  auto width = dense_range(selectivity, rows, 1).second;
  for (std::size_t i = 0; i < count; ++i) {
    auto [lo, hi] = dense_range(selectivity, rows, static_cast<std::uint64_t>(
                                                       draw.between(1, static_cast<std::int64_t>(rows - width + 1))));
    char id[24];
    std::snprintf(id, sizeof id, "dense_%03zu", i + 1);
    out.push_back({id, "SELECT l_orderkey, l_extendedprice FROM lineitem WHERE l_dense BETWEEN ? AND ?",
                   {Value(static_cast<std::int64_t>(lo)), Value(static_cast<std::int64_t>(hi))}});
  }
  return out;
}

}  // namespace qshare::workload
