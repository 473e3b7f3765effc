#pragma once

#include <random>
#include <string>
#include <vector>

#include "qshare/dq/relation.hpp"
#include "qshare/ir/batch.hpp"
#include "qshare/ir/query_spec.hpp"

namespace qshare::testing {

/// Random employees/departments data. Without `nulls` every column is NOT NULL.
inline dq::Database random_employees_db(std::mt19937_64& rng, const ir::Catalog& catalog, std::size_t rows,
                                        bool nulls) {
  static const char* names[] = {"Anna", "Bob", "Carl", "Dora", "Emil", "Alex", "Berta"};
  static const char* cities[] = {"Basel", "Zurich", "Bern", "Geneva", "Lugano"};
  static const char* regions[] = {"EU", "US", "APAC"};
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  auto maybe_null = [&](Value v, int percent) { return nulls && static_cast<int>(rng() % 100) < percent ? Value() : v; };
  std::vector<Row> emp;
  for (std::size_t i = 1; i <= rows; ++i) {
    Row r;
    r.push_back(Value(static_cast<std::int64_t>(i)));
    r.push_back(maybe_null(Value(std::string(names[pick(7)])), 5));
    r.push_back(Value(static_cast<std::int64_t>(18 + pick(48))));
    r.push_back(maybe_null(Value(static_cast<std::int64_t>(1 + pick(22))), 3));
    r.push_back(maybe_null(Value(static_cast<double>(100000 + pick(800000)) / 100.0), 5));
    emp.push_back(std::move(r));
  }
  std::vector<Row> dept;
  for (std::int64_t d = 1; d <= 20; ++d) {
    dept.push_back({Value(d), Value(std::string(cities[pick(5)])), Value("Street " + std::to_string(d)),
                    Value(std::string(regions[pick(3)]))});
  }
  dq::Database db;
  db.tables["employees"] = dq::make_relation(catalog.table("employees"), std::move(emp));
  db.tables["departments"] = dq::make_relation(catalog.table("departments"), std::move(dept));
  return db;
}

inline const std::vector<std::string>& random_shapes() {
  static const std::vector<std::string> shapes = {
      "SELECT E.id, E.name, E.salary FROM employees E{where}",
      "SELECT * FROM employees E{where}",
      "SELECT E.id, E.name, D.city, D.region FROM employees E JOIN departments D ON E.dept_id = D.dept_id{where}",
      "SELECT E.dept_id, COUNT(*) AS n, SUM(E.salary) AS total, AVG(E.age) AS avg_age, MIN(E.name) AS first_name "
      "FROM employees E{where} GROUP BY E.dept_id",
      "SELECT D.region, COUNT(*) AS n, MAX(E.salary) AS top FROM employees E JOIN departments D "
      "ON E.dept_id = D.dept_id{where} GROUP BY D.region",
      "SELECT COUNT(*) AS n, SUM(E.age) AS s, MIN(E.salary) AS lo FROM employees E{where}",
      "SELECT E.id, E.name, E.salary FROM employees E{where} ORDER BY E.salary DESC, E.id{limit}",
      "SELECT E.name, D.city, E.age * 2 AS dbl FROM employees E JOIN departments D ON E.dept_id = D.dept_id{where} "
      "ORDER BY D.city, dbl DESC{limit}",
      "SELECT E.age, COUNT(*) AS n FROM employees E{where} GROUP BY E.age ORDER BY n DESC, E.age{limit}",
      "SELECT E.id FROM employees E{where}{limit}",
      "SELECT E.id, E.salary / E.age AS ratio FROM employees E{where}",
  };
  return shapes;
}

inline bool shape_joins(std::size_t shape) { return random_shapes()[shape].find(" JOIN ") != std::string::npos; }

inline std::string random_atom(std::mt19937_64& rng, bool join, std::size_t rows) {
  auto n = [&](std::int64_t lo, std::int64_t hi) { return std::to_string(lo + static_cast<std::int64_t>(rng() % (hi - lo + 1))); };
  static const char* names[] = {"'Anna'", "'Bob'", "'Carl'", "'Dora'"};
  static const char* prefixes[] = {"'A%'", "'B%'", "'Do%'", "'%a'"};
  static const char* cities[] = {"'Basel'", "'Zurich'", "'Bern'"};
  auto r = static_cast<std::int64_t>(rows);
  int kinds = join ? 13 : 10;
  switch (rng() % kinds) {
    case 0: return "E.id > " + n(0, r);
    case 1: return "E.id BETWEEN " + n(0, r / 2) + " AND " + n(r / 2, r);
    case 2: return "E.age < " + n(18, 66);
    case 3: return "E.age IN (" + n(18, 30) + ", " + n(30, 45) + ", " + n(45, 65) + ")";
    case 4: return "E.dept_id = " + n(1, 22);
    case 5: return "E.salary >= " + n(1000, 9000) + ".5";
    case 6: return "E.name LIKE " + std::string(prefixes[rng() % 4]);
    case 7: return "E.name = " + std::string(names[rng() % 4]);
    case 8: return "NOT (E.age BETWEEN " + n(20, 40) + " AND " + n(40, 60) + ")";
    case 9: return "E.id <> " + n(1, r);
    case 10: return "D.city = " + std::string(cities[rng() % 3]);
    case 11: return "D.region IN ('EU', 'US')";
    default: return "D.dept_id < " + n(1, 21);
  }
}

inline std::string random_where(std::mt19937_64& rng, bool join, std::size_t rows) {
  if (rng() % 10 == 0) return "";
  std::string out = random_atom(rng, join, rows);
  int extra = static_cast<int>(rng() % 3);
  for (int i = 0; i < extra; ++i) {
    std::string op = rng() % 2 ? " AND " : " OR ";
    if (rng() % 3 == 0) {
      out = "(" + out + ")" + op + "(" + random_atom(rng, join, rows) + " OR " + random_atom(rng, join, rows) + ")";
    } else {
      out = out + op + random_atom(rng, join, rows);
    }
  }
  return " WHERE " + out;
}

inline std::string instantiate(std::mt19937_64& rng, std::size_t shape, std::size_t rows) {
  std::string sql = random_shapes()[shape];
  auto replace = [&](const std::string& key, const std::string& with) {
    auto p = sql.find(key);
    if (p != std::string::npos) sql.replace(p, key.size(), with);
  };
  replace("{where}", random_where(rng, shape_joins(shape), rows));
  replace("{limit}", rng() % 4 == 0 ? "" : " LIMIT " + std::to_string(rng() % 12));
  return sql;
}

/// One batch of 1..max_size members. Usually one shape; sometimes two.
inline ir::QueryBatch random_batch(std::mt19937_64& rng, const ir::Catalog& catalog, std::size_t rows,
                                   std::uint64_t batch_id, std::size_t max_size = 16) {
  std::size_t n = 1 + static_cast<std::size_t>(rng() % max_size);
  std::size_t shape = static_cast<std::size_t>(rng() % random_shapes().size());
  std::size_t other = rng() % 8 == 0 ? static_cast<std::size_t>(rng() % random_shapes().size()) : shape;
  ir::QueryBatch batch;
  batch.batch_id = batch_id;
  for (std::size_t i = 0; i < n; ++i) {
    std::string sql = instantiate(rng, i % 3 == 2 ? other : shape, rows);
    ir::BatchMember m;
    m.id = ir::QueryId{static_cast<std::uint32_t>(i + 1)};
    m.original_id = "b" + std::to_string(batch_id) + "_q" + std::to_string(i + 1);
    m.spec = ir::parse_query(sql, catalog);
    batch.members.push_back(std::move(m));
  }
  return batch;
}

}  // namespace qshare::testing
