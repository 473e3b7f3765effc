#include "qshare/core/value.hpp"

#include <charconv>
#include <cmath>
#include <cstring>

namespace qshare {

std::string_view to_string(LogicalType type) {
  switch (type) {
    case LogicalType::Bool: return "bool";
    case LogicalType::Int: return "int";
    case LogicalType::Double: return "double";
    case LogicalType::String: return "string";
    case LogicalType::Date: return "date";
    case LogicalType::IntArray: return "int_array";
  }
  return "unknown";
}

std::optional<LogicalType> parse_logical_type(std::string_view name) {
  if (name == "bool" || name == "boolean") return LogicalType::Bool;
  if (name == "int" || name == "integer" || name == "bigint") return LogicalType::Int;
  if (name == "double" || name == "decimal" || name == "real") return LogicalType::Double;
  if (name == "string" || name == "varchar" || name == "text") return LogicalType::String;
  if (name == "date") return LogicalType::Date;
  return std::nullopt;
}

bool is_numeric(LogicalType type) { return type == LogicalType::Int || type == LogicalType::Double; }

std::string format_double(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  std::string out(buf, res.ptr);
  if (out.find_first_of(".eEn") == std::string::npos) out += ".0";
  return out;
}

std::string Value::to_sql() const {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "NULL";
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "TRUE" : "FALSE";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          if (v == INT64_MIN) return "(-9223372036854775807 - 1)";
          return std::to_string(v);
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(v);
        } else if constexpr (std::is_same_v<T, std::string>) {
          std::string out = "'";
          for (char c : v) {
            if (c == '\'') out += '\'';
            out += c;
          }
          return out + "'";
        } else {
          std::string out = "ARRAY[";
          for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out += ",";
            out += std::to_string(v[i]);
          }
          return out + "]";
        }
      },
      v_);
}

std::string Value::to_text() const {
  if (is_null()) return "";
  if (is_string()) return as_string();
  return to_sql();
}

std::size_t Value::hash() const {
  return std::visit(
      [](const auto& v) -> std::size_t {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return 0x9e3779b97f4a7c15ULL;
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          // ints hash like the equal double so that 1 and 1.0 collide
          return std::hash<double>{}(static_cast<double>(v));
        } else if constexpr (std::is_same_v<T, IntArray>) {
          std::size_t h = 0xcbf29ce484222325ULL;
          for (auto x : v) h = (h ^ std::hash<std::int64_t>{}(x)) * 0x100000001b3ULL;
          return h;
        } else {
          return std::hash<T>{}(v);
        }
      },
      v_);
}

namespace {

int type_rank(const Value& v) {
  if (v.is_null()) return 0;
  if (v.is_bool()) return 1;
  if (v.is_numeric()) return 2;
  if (v.is_string()) return 3;
  return 4;
}

int three_way_double(double a, double b) { return a < b ? -1 : (a > b ? 1 : 0); }

}  // namespace

int compare(const Value& a, const Value& b) {
  int ra = type_rank(a);
  int rb = type_rank(b);
  if (ra != rb) return ra < rb ? -1 : 1;
  switch (ra) {
    case 0: return 0;
    case 1: return static_cast<int>(a.as_bool()) - static_cast<int>(b.as_bool());
    case 2:
      if (a.is_int() && b.is_int()) {
        return a.as_int() < b.as_int() ? -1 : (a.as_int() > b.as_int() ? 1 : 0);
      }
      return three_way_double(a.numeric(), b.numeric());
    case 3: {
      int c = a.as_string().compare(b.as_string());
      return c < 0 ? -1 : (c > 0 ? 1 : 0);
    }
    default: {
      const auto& x = a.as_array();
      const auto& y = b.as_array();
      for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
        if (x[i] != y[i]) return x[i] < y[i] ? -1 : 1;
      }
      return x.size() == y.size() ? 0 : (x.size() < y.size() ? -1 : 1);
    }
  }
}

std::optional<int> sql_compare(const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return std::nullopt;
  if (type_rank(a) != type_rank(b)) return std::nullopt;
  return compare(a, b);
}

bool operator==(const Value& a, const Value& b) { return compare(a, b) == 0; }

bool approx_equal(const Value& a, const Value& b, double rel_tol) {
  if (a.is_numeric() && b.is_numeric() && (a.is_double() || b.is_double())) {
    double x = a.numeric();
    double y = b.numeric();
    if (x == y) return true;
    double scale = std::max(std::fabs(x), std::fabs(y));
    return std::fabs(x - y) <= rel_tol * std::max(scale, 1.0);
  }
  return compare(a, b) == 0;
}

std::size_t RowHash::operator()(const Row& row) const {
  std::size_t h = 0x84222325cbf29ce4ULL;
  for (const auto& v : row) h = (h ^ v.hash()) * 0x100000001b3ULL;
  return h;
}

bool like_match(std::string_view text, std::string_view pattern) {
  // iterative wildcard matching with backtracking on the last '%'
  std::size_t t = 0, p = 0;
  std::size_t star = std::string_view::npos, mark = 0;
  while (t < text.size()) {
    if (p < pattern.size() && pattern[p] == '%') {
      star = p++;
      mark = t;
    } else if (p < pattern.size() && (pattern[p] == '_' || pattern[p] == text[t])) {
      ++t;
      ++p;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '%') ++p;
  return p == pattern.size();
}

}  // namespace qshare
