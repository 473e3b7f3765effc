#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>

#include "qshare/core/error.hpp"
#include "qshare/core/sql_ast.hpp"

namespace qshare::sql {

namespace {

enum class Tok { Ident, QuotedIdent, Int, Double, String, Symbol, Param, End };

struct Token {
  Tok kind;
  std::string text;  // identifiers lower-cased, symbols verbatim
  std::size_t offset;
};

const std::set<std::string>& reserved() {
  static const std::set<std::string> words = {
      "select", "from",  "where", "group", "by",    "order", "limit", "with",     "as",
      "join",   "inner", "cross", "on",    "and",   "or",    "not",   "between",  "like",
      "in",     "is",    "null",  "true",  "false", "case",  "when",  "then",     "else",
      "end",    "asc",   "desc",  "over",  "partition", "having", "distinct", "left",
      "right",  "full",  "outer", "union", "unnest", "array", "using"};
  return words;
}

std::vector<Token> lex(const std::string& text) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '-' && i + 1 < n && text[i + 1] == '-') {
      while (i < n && text[i] != '\n') ++i;
      continue;
    }
    std::size_t start = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < n && (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_')) ++i;
      std::string word = text.substr(start, i - start);
      std::transform(word.begin(), word.end(), word.begin(),
                     [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
      out.push_back({Tok::Ident, std::move(word), start});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
      bool is_double = false;
      while (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
      if (i < n && text[i] == '.') {
        is_double = true;
        ++i;
        while (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
      }
      if (i < n && (text[i] == 'e' || text[i] == 'E')) {
        std::size_t save = i;
        ++i;
        if (i < n && (text[i] == '+' || text[i] == '-')) ++i;
        if (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) {
          is_double = true;
          while (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
        } else {
          i = save;
        }
      }
      out.push_back({is_double ? Tok::Double : Tok::Int, text.substr(start, i - start), start});
      continue;
    }
    if (c == '\'') {
      std::string s;
      ++i;
      while (true) {
        if (i >= n) throw SyntaxError("unterminated string literal", start);
        if (text[i] == '\'') {
          if (i + 1 < n && text[i + 1] == '\'') {
            s += '\'';
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        s += text[i++];
      }
      out.push_back({Tok::String, std::move(s), start});
      continue;
    }
    if (c == '"') {
      std::string s;
      ++i;
      while (i < n && text[i] != '"') s += text[i++];
      if (i >= n) throw SyntaxError("unterminated quoted identifier", start);
      ++i;
      out.push_back({Tok::QuotedIdent, std::move(s), start});
      continue;
    }
    if (c == '?') {
      out.push_back({Tok::Param, "?", start});
      ++i;
      continue;
    }
    static const char* two_char[] = {"<=", ">=", "<>", "!=", "<<", "||"};
    bool matched = false;
    for (const char* sym : two_char) {
      if (text.compare(i, 2, sym) == 0) {
        out.push_back({Tok::Symbol, sym, start});
        i += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (std::string_view("(),.;*+-/%=<>[]|&").find(c) != std::string_view::npos) {
      out.push_back({Tok::Symbol, std::string(1, c), start});
      ++i;
      continue;
    }
    throw SyntaxError(std::string("unexpected character '") + c + "'", start);
  }
  out.push_back({Tok::End, "", n});
  return out;
}

class Parser {
 public:
  explicit Parser(const std::string& text) : tokens_(lex(text)) {}

  SelectStmt statement() {
    SelectStmt stmt = select_stmt();
    accept_symbol(";");
    if (peek().kind != Tok::End) fail("unexpected trailing input");
    stmt.param_count = params_;
    return stmt;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }
  const Token& next() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }

  [[noreturn]] void fail(const std::string& message) const {
    const Token& t = peek();
    std::string near = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
    throw SyntaxError(message + " near " + near, t.offset);
  }

  bool is_keyword(const char* kw, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == Tok::Ident && t.text == kw;
  }
  bool accept_keyword(const char* kw) {
    if (is_keyword(kw)) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect_keyword(const char* kw) {
    if (!accept_keyword(kw)) {
      std::string upper(kw);
      std::transform(upper.begin(), upper.end(), upper.begin(),
                     [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
      fail("expected " + upper);
    }
  }
  bool is_symbol(const char* sym, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == Tok::Symbol && t.text == sym;
  }
  bool accept_symbol(const char* sym) {
    if (is_symbol(sym)) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect_symbol(const char* sym) {
    if (!accept_symbol(sym)) fail(std::string("expected '") + sym + "'");
  }

  bool at_identifier() const {
    const Token& t = peek();
    return t.kind == Tok::QuotedIdent || (t.kind == Tok::Ident && !reserved().count(t.text));
  }
  std::string identifier(const char* what) {
    if (!at_identifier()) fail(std::string("expected ") + what);
    return next().text;
  }

  SelectStmt select_stmt() {
    SelectStmt stmt;
    if (accept_keyword("with")) {
      do {
        Cte cte;
        cte.name = identifier("common table expression name");
        expect_keyword("as");
        expect_symbol("(");
        cte.query = std::make_shared<SelectStmt>(select_stmt());
        expect_symbol(")");
        stmt.with.push_back(std::move(cte));
      } while (accept_symbol(","));
    }
    expect_keyword("select");
    if (is_keyword("distinct")) throw UnsupportedError("DISTINCT");
    do {
      stmt.items.push_back(select_item());
    } while (accept_symbol(","));

    if (accept_keyword("from")) {
      stmt.from = table_ref();
      while (true) {
        if (is_keyword("left") || is_keyword("right") || is_keyword("full") || is_keyword("outer")) {
          throw UnsupportedError("outer join");
        }
        if (accept_symbol(",")) {
          stmt.joins.push_back({JoinKind::Comma, table_ref(), nullptr});
        } else if (accept_keyword("cross")) {
          expect_keyword("join");
          stmt.joins.push_back({JoinKind::Cross, table_ref(), nullptr});
        } else if (is_keyword("join") || is_keyword("inner")) {
          accept_keyword("inner");
          expect_keyword("join");
          JoinClause join{JoinKind::Inner, table_ref(), nullptr};
          if (is_keyword("using")) throw UnsupportedError("JOIN USING");
          expect_keyword("on");
          join.on = expr();
          stmt.joins.push_back(std::move(join));
        } else {
          break;
        }
      }
    }
    if (accept_keyword("where")) stmt.where = expr();
    if (accept_keyword("group")) {
      expect_keyword("by");
      do {
        stmt.group_by.push_back(expr());
      } while (accept_symbol(","));
    }
    if (is_keyword("having")) throw UnsupportedError("HAVING");
    if (accept_keyword("order")) {
      expect_keyword("by");
      stmt.order_by = order_list();
    }
    if (accept_keyword("limit")) {
      const Token& t = peek();
      if (t.kind != Tok::Int) fail("expected integer after LIMIT");
      stmt.limit = std::stoll(next().text);
    }
    if (is_keyword("union")) throw UnsupportedError("UNION");
    return stmt;
  }

  std::vector<OrderItem> order_list() {
    std::vector<OrderItem> items;
    do {
      OrderItem item{expr(), false};
      if (accept_keyword("desc")) {
        item.descending = true;
      } else {
        accept_keyword("asc");
      }
      items.push_back(std::move(item));
    } while (accept_symbol(","));
    return items;
  }

  SelectItem select_item() {
    SelectItem item;
    if (accept_symbol("*")) {
      auto e = std::make_shared<Expr>();
      e->kind = ExprKind::Star;
      item.expr = e;
      return item;
    }
    if (at_identifier() && is_symbol(".", 1) && is_symbol("*", 2)) {
      auto e = std::make_shared<Expr>();
      e->kind = ExprKind::Star;
      e->qualifier = next().text;
      pos_ += 2;
      item.expr = e;
      return item;
    }
    item.expr = expr();
    if (accept_keyword("as")) {
      item.alias = identifier("alias");
    } else if (at_identifier()) {
      item.alias = next().text;
    }
    return item;
  }

  TableRef table_ref() {
    TableRef ref;
    if (is_symbol("(")) throw UnsupportedError("subquery");
    if (accept_keyword("unnest")) {
      ref.kind = TableRef::Kind::Unnest;
      expect_symbol("(");
      ref.unnest_arg = expr();
      expect_symbol(")");
      accept_keyword("as");
      ref.alias = identifier("UNNEST alias");
      if (accept_symbol("(")) {
        ref.unnest_column = identifier("UNNEST column alias");
        expect_symbol(")");
      } else {
        ref.unnest_column = ref.alias;
      }
      return ref;
    }
    ref.name = identifier("table name");
    if (accept_keyword("as")) {
      ref.alias = identifier("table alias");
    } else if (at_identifier()) {
      ref.alias = next().text;
    }
    return ref;
  }

  ExprPtr expr() { return or_expr(); }

  ExprPtr or_expr() {
    ExprPtr lhs = and_expr();
    while (accept_keyword("or")) lhs = make_binary("OR", lhs, and_expr());
    return lhs;
  }

  ExprPtr and_expr() {
    ExprPtr lhs = not_expr();
    while (accept_keyword("and")) lhs = make_binary("AND", lhs, not_expr());
    return lhs;
  }

  ExprPtr not_expr() {
    if (accept_keyword("not")) {
      auto e = std::make_shared<Expr>();
      e->kind = ExprKind::Unary;
      e->op = "NOT";
      e->args = {not_expr()};
      return e;
    }
    return predicate();
  }

  ExprPtr predicate() {
    ExprPtr lhs = bitor_expr();
    static const char* comparisons[] = {"=", "<>", "!=", "<", "<=", ">", ">="};
    for (const char* op : comparisons) {
      if (accept_symbol(op)) {
        std::string name = std::string(op) == "!=" ? "<>" : op;
        return make_binary(name, lhs, bitor_expr());
      }
    }
    bool negated = false;
    if (is_keyword("not") && (is_keyword("between", 1) || is_keyword("like", 1) || is_keyword("in", 1))) {
      ++pos_;
      negated = true;
    }
    auto e = std::make_shared<Expr>();
    e->negated = negated;
    if (accept_keyword("between")) {
      e->kind = ExprKind::Between;
      ExprPtr lo = bitor_expr();
      expect_keyword("and");
      e->args = {lhs, lo, bitor_expr()};
      return e;
    }
    if (accept_keyword("like")) {
      e->kind = ExprKind::Like;
      e->args = {lhs, bitor_expr()};
      return e;
    }
    if (accept_keyword("in")) {
      e->kind = ExprKind::In;
      expect_symbol("(");
      if (is_keyword("select")) throw UnsupportedError("subquery");
      e->args.push_back(lhs);
      do {
        e->args.push_back(expr());
      } while (accept_symbol(","));
      expect_symbol(")");
      return e;
    }
    if (accept_keyword("is")) {
      e->kind = ExprKind::IsNull;
      e->negated = accept_keyword("not");
      expect_keyword("null");
      e->args = {lhs};
      return e;
    }
    if (negated) fail("expected BETWEEN, LIKE or IN after NOT");
    return lhs;
  }

  ExprPtr bitor_expr() {
    ExprPtr lhs = bitand_expr();
    while (is_symbol("|")) {
      ++pos_;
      lhs = make_binary("|", lhs, bitand_expr());
    }
    return lhs;
  }

  ExprPtr bitand_expr() {
    ExprPtr lhs = shift_expr();
    while (is_symbol("&")) {
      ++pos_;
      lhs = make_binary("&", lhs, shift_expr());
    }
    return lhs;
  }

  ExprPtr shift_expr() {
    ExprPtr lhs = additive();
    while (is_symbol("<<")) {
      ++pos_;
      lhs = make_binary("<<", lhs, additive());
    }
    return lhs;
  }

  ExprPtr additive() {
    ExprPtr lhs = multiplicative();
    while (is_symbol("+") || is_symbol("-")) {
      std::string op = next().text;
      lhs = make_binary(op, lhs, multiplicative());
    }
    return lhs;
  }

  ExprPtr multiplicative() {
    ExprPtr lhs = unary();
    while (is_symbol("*") || is_symbol("/") || is_symbol("%")) {
      std::string op = next().text;
      lhs = make_binary(op, lhs, unary());
    }
    return lhs;
  }

  ExprPtr unary() {
    if (accept_symbol("-")) {
      ExprPtr operand = unary();
      if (operand->kind == ExprKind::Literal && operand->literal.is_int() &&
          operand->literal.as_int() != INT64_MIN) {
        return make_literal(Value(-operand->literal.as_int()));
      }
      if (operand->kind == ExprKind::Literal && operand->literal.is_double()) {
        return make_literal(Value(-operand->literal.as_double()));
      }
      auto e = std::make_shared<Expr>();
      e->kind = ExprKind::Unary;
      e->op = "-";
      e->args = {operand};
      return e;
    }
    if (accept_symbol("+")) return unary();
    return primary();
  }

  ExprPtr primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Int: {
        std::string text = next().text;
        std::int64_t v = 0;
        auto res = std::from_chars(text.data(), text.data() + text.size(), v);
        if (res.ec != std::errc()) {
          // 9223372036854775808 only appears negated; keep it as a double otherwise
          return make_literal(Value(std::stod(text)));
        }
        return make_literal(Value(v));
      }
      case Tok::Double: return make_literal(Value(std::stod(next().text)));
      case Tok::String: return make_literal(Value(next().text));
      case Tok::Param: {
        next();
        auto e = std::make_shared<Expr>();
        e->kind = ExprKind::Param;
        e->param_index = params_++;
        return e;
      }
      case Tok::Symbol:
        if (accept_symbol("(")) {
          if (is_keyword("select") || is_keyword("with")) throw UnsupportedError("subquery");
          ExprPtr inner = expr();
          expect_symbol(")");
          return inner;
        }
        fail("expected expression");
      case Tok::End: fail("unexpected end of input");
      case Tok::Ident:
      case Tok::QuotedIdent: break;
    }
    if (t.kind == Tok::Ident) {
      if (accept_keyword("null")) return make_literal(Value());
      if (accept_keyword("true")) return make_literal(Value(true));
      if (accept_keyword("false")) return make_literal(Value(false));
      if (accept_keyword("case")) return case_expr();
      if (is_keyword("array") && is_symbol("[", 1)) {
        pos_ += 2;
        auto e = std::make_shared<Expr>();
        e->kind = ExprKind::Array;
        if (!is_symbol("]")) {
          do {
            e->args.push_back(expr());
          } while (accept_symbol(","));
        }
        expect_symbol("]");
        return e;
      }
      if (t.text == "date" && peek(1).kind == Tok::String) {
        ++pos_;
        return make_literal(Value(next().text));
      }
      if (t.text == "select" || t.text == "exists") throw UnsupportedError("subquery");
    }
    bool callable = t.kind == Tok::Ident && is_symbol("(", 1) &&
                    (!reserved().count(t.text) || t.text == "unnest");
    if (callable) return call();
    std::string first = identifier("expression");
    if (accept_symbol(".")) {
      return make_column(first, identifier("column name"));
    }
    return make_column("", first);
  }

  ExprPtr call() {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Call;
    e->name = next().text;
    std::transform(e->name.begin(), e->name.end(), e->name.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
    expect_symbol("(");
    if (is_keyword("distinct")) throw UnsupportedError("DISTINCT aggregate");
    if (accept_symbol("*")) {
      e->star_arg = true;
    } else if (!is_symbol(")")) {
      do {
        e->args.push_back(expr());
      } while (accept_symbol(","));
    }
    expect_symbol(")");
    if (accept_keyword("over")) {
      e->is_window = true;
      expect_symbol("(");
      if (accept_keyword("partition")) {
        expect_keyword("by");
        do {
          e->partition_by.push_back(expr());
        } while (accept_symbol(","));
      }
      if (accept_keyword("order")) {
        expect_keyword("by");
        e->window_order = order_list();
      }
      expect_symbol(")");
    }
    return e;
  }

  ExprPtr case_expr() {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Case;
    if (!is_keyword("when")) throw UnsupportedError("simple CASE");
    while (accept_keyword("when")) {
      e->args.push_back(expr());
      expect_keyword("then");
      e->args.push_back(expr());
    }
    if (accept_keyword("else")) {
      e->args.push_back(expr());
      e->has_else = true;
    }
    expect_keyword("end");
    return e;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  int params_ = 0;
};

}  // namespace

SelectStmt parse_select(const std::string& text) { return Parser(text).statement(); }

ExprPtr make_literal(Value v) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Literal;
  e->literal = std::move(v);
  return e;
}

ExprPtr make_column(std::string qualifier, std::string name) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Column;
  e->qualifier = std::move(qualifier);
  e->name = std::move(name);
  return e;
}

ExprPtr make_binary(std::string op, ExprPtr lhs, ExprPtr rhs) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Binary;
  e->op = std::move(op);
  e->args = {std::move(lhs), std::move(rhs)};
  return e;
}

std::string to_sql(const Expr& e) {
  auto list = [](const std::vector<ExprPtr>& xs, std::size_t from) {
    std::string out;
    for (std::size_t i = from; i < xs.size(); ++i) {
      if (i > from) out += ", ";
      out += to_sql(*xs[i]);
    }
    return out;
  };
  switch (e.kind) {
    case ExprKind::Literal: return e.literal.to_sql();
    case ExprKind::Param: return "?";
    case ExprKind::Column: return e.qualifier.empty() ? e.name : e.qualifier + "." + e.name;
    case ExprKind::Star: return e.qualifier.empty() ? "*" : e.qualifier + ".*";
    case ExprKind::Unary:
      return e.op == "NOT" ? "(NOT " + to_sql(*e.args[0]) + ")" : "(-" + to_sql(*e.args[0]) + ")";
    case ExprKind::Binary:
      return "(" + to_sql(*e.args[0]) + " " + e.op + " " + to_sql(*e.args[1]) + ")";
    case ExprKind::Between:
      return "(" + to_sql(*e.args[0]) + (e.negated ? " NOT" : "") + " BETWEEN " +
             to_sql(*e.args[1]) + " AND " + to_sql(*e.args[2]) + ")";
    case ExprKind::Like:
      return "(" + to_sql(*e.args[0]) + (e.negated ? " NOT" : "") + " LIKE " + to_sql(*e.args[1]) + ")";
    case ExprKind::In:
      return "(" + to_sql(*e.args[0]) + (e.negated ? " NOT" : "") + " IN (" + list(e.args, 1) + "))";
    case ExprKind::IsNull:
      return "(" + to_sql(*e.args[0]) + (e.negated ? " IS NOT NULL)" : " IS NULL)");
    case ExprKind::Case: {
      std::string out = "CASE";
      std::size_t pairs = (e.args.size() - (e.has_else ? 1 : 0)) / 2;
      for (std::size_t i = 0; i < pairs; ++i) {
        out += " WHEN " + to_sql(*e.args[2 * i]) + " THEN " + to_sql(*e.args[2 * i + 1]);
      }
      if (e.has_else) out += " ELSE " + to_sql(*e.args.back());
      return out + " END";
    }
    case ExprKind::Call: {
      std::string out = e.name + "(" + (e.star_arg ? "*" : list(e.args, 0)) + ")";
      if (e.is_window) {
        out += " OVER (";
        if (!e.partition_by.empty()) out += "PARTITION BY " + list(e.partition_by, 0);
        if (!e.window_order.empty()) {
          if (!e.partition_by.empty()) out += " ";
          out += "ORDER BY ";
          for (std::size_t i = 0; i < e.window_order.size(); ++i) {
            if (i) out += ", ";
            out += to_sql(*e.window_order[i].expr) + (e.window_order[i].descending ? " DESC" : "");
          }
        }
        out += ")";
      }
      return out;
    }
    case ExprKind::Array: return "ARRAY[" + list(e.args, 0) + "]";
  }
  return "";
}

}  // namespace qshare::sql
