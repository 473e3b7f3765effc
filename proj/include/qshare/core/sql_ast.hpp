#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qshare/core/value.hpp"

namespace qshare::sql {

struct Expr;
struct SelectStmt;
using ExprPtr = std::shared_ptr<const Expr>;

enum class ExprKind {
  Literal,   // literal
  Param,     // '?' placeholder, param_index
  Column,    // [qualifier.]name
  Star,      // * or qualifier.*
  Unary,     // op in {"-", "NOT"}, args[0]
  Binary,    // op in {"+","-","*","/","=","<>","<","<=",">",">=","AND","OR","|","&","<<"}
  Between,   // args = {e, lo, hi}; negated
  Like,      // args = {e, pattern}; negated
  In,        // args = {e, item...}; negated
  IsNull,    // args = {e}; negated
  Case,      // args = {when1, then1, ..., [else]}; has_else
  Call,      // name(args...) or name(*) when star_arg; optional OVER clause
  Array,     // ARRAY[args...]
};

struct OrderItem {
  ExprPtr expr;
  bool descending = false;
};

struct Expr {
  ExprKind kind = ExprKind::Literal;
  Value literal;
  int param_index = -1;
  std::string qualifier;
  std::string name;  // column name or (upper-cased) function name
  std::string op;
  std::vector<ExprPtr> args;
  bool negated = false;
  bool has_else = false;
  bool star_arg = false;
  bool is_window = false;
  std::vector<ExprPtr> partition_by;
  std::vector<OrderItem> window_order;
};

struct SelectItem {
  ExprPtr expr;
  std::string alias;
};

struct TableRef {
  enum class Kind { Named, Unnest };
  Kind kind = Kind::Named;
  std::string name;
  std::string alias;
  ExprPtr unnest_arg;
  std::string unnest_column;  // UNNEST(x) AS alias(column)
};

enum class JoinKind { Inner, Cross, Comma };

struct JoinClause {
  JoinKind kind = JoinKind::Inner;
  TableRef right;
  ExprPtr on;
};

struct Cte {
  std::string name;
  std::shared_ptr<const SelectStmt> query;
};

struct SelectStmt {
  std::vector<Cte> with;
  std::vector<SelectItem> items;
  std::optional<TableRef> from;
  std::vector<JoinClause> joins;
  ExprPtr where;
  std::vector<ExprPtr> group_by;
  std::vector<OrderItem> order_by;
  std::optional<std::int64_t> limit;
  int param_count = 0;
};

/// Parses a single SELECT statement (optionally prefixed by WITH and followed by ';').
/// Throws SyntaxError on malformed input.
SelectStmt parse_select(const std::string& text);

/// Expression factories used by generators and tests.
ExprPtr make_literal(Value v);
ExprPtr make_column(std::string qualifier, std::string name);
ExprPtr make_binary(std::string op, ExprPtr lhs, ExprPtr rhs);

/// Renders an expression back to SQL text (canonical spacing, fully parenthesized binaries).
std::string to_sql(const Expr& expr);

}  // namespace qshare::sql
