#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace qshare {

/// Logical column types known to the catalog. Dates are ISO-8601 strings.
enum class LogicalType { Bool, Int, Double, String, Date, IntArray };

std::string_view to_string(LogicalType type);
std::optional<LogicalType> parse_logical_type(std::string_view name);

/// True for types whose values are compared numerically.
bool is_numeric(LogicalType type);

using IntArray = std::vector<std::int64_t>;

/// A single SQL value. NULL is the monostate.
class Value {
 public:
  using Storage = std::variant<std::monostate, bool, std::int64_t, double, std::string, IntArray>;

  Value() = default;
  Value(bool v) : v_(v) {}
  Value(std::int64_t v) : v_(v) {}
  Value(int v) : v_(static_cast<std::int64_t>(v)) {}
  Value(double v) : v_(v) {}
  Value(std::string v) : v_(std::move(v)) {}
  Value(const char* v) : v_(std::string(v)) {}
  Value(IntArray v) : v_(std::move(v)) {}

  static Value null() { return Value(); }

  bool is_null() const { return std::holds_alternative<std::monostate>(v_); }
  bool is_bool() const { return std::holds_alternative<bool>(v_); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(v_); }
  bool is_double() const { return std::holds_alternative<double>(v_); }
  bool is_numeric() const { return is_int() || is_double(); }
  bool is_string() const { return std::holds_alternative<std::string>(v_); }
  bool is_array() const { return std::holds_alternative<IntArray>(v_); }

  bool as_bool() const { return std::get<bool>(v_); }
  std::int64_t as_int() const { return std::get<std::int64_t>(v_); }
  double as_double() const { return std::get<double>(v_); }
  const std::string& as_string() const { return std::get<std::string>(v_); }
  const IntArray& as_array() const { return std::get<IntArray>(v_); }

  /// Numeric value widened to double. Precondition: is_numeric().
  double numeric() const { return is_int() ? static_cast<double>(as_int()) : as_double(); }

  const Storage& storage() const { return v_; }

  /// SQL literal text (strings quoted, doubles round-trippable).
  std::string to_sql() const;
  /// Plain text for reports and fixture files (NULL renders empty).
  std::string to_text() const;

  std::size_t hash() const;

  friend bool operator==(const Value& a, const Value& b);
  friend bool operator!=(const Value& a, const Value& b) { return !(a == b); }

 private:
  Storage v_;
};

/// Total order used for sorting and grouping: NULL < bool < numbers < strings < arrays.
/// Ints and doubles compare numerically. Returns <0, 0, >0.
int compare(const Value& a, const Value& b);

/// SQL comparison semantics: nullopt when either side is NULL or the types are incomparable.
std::optional<int> sql_compare(const Value& a, const Value& b);

/// Numeric-tolerant equality: doubles within `rel_tol` relative difference are equal.
bool approx_equal(const Value& a, const Value& b, double rel_tol);

/// Formats a double so that it re-parses as a double (always carries '.' or an exponent).
std::string format_double(double v);

struct ValueLess {
  bool operator()(const Value& a, const Value& b) const { return compare(a, b) < 0; }
};

struct ValueHash {
  std::size_t operator()(const Value& v) const { return v.hash(); }
};

using Row = std::vector<Value>;

struct RowHash {
  std::size_t operator()(const Row& row) const;
};

/// SQL LIKE with '%' and '_' wildcards, byte-wise and case-sensitive.
bool like_match(std::string_view text, std::string_view pattern);

}  // namespace qshare
