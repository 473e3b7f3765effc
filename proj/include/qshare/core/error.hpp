#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qshare {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed SQL text.
class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& message, std::size_t offset)
      : Error("syntax error at offset " + std::to_string(offset) + ": " + message), offset_(offset) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Reference to a table or column the catalog does not know.
class CatalogError : public Error {
 public:
  using Error::Error;
};

/// Valid SQL outside the supported subset. The message names the construct.
class UnsupportedError : public Error {
 public:
  explicit UnsupportedError(const std::string& construct)
      : Error("unsupported construct: " + construct), construct_(construct) {}

  const std::string& construct() const { return construct_; }

 private:
  std::string construct_;
};

/// Type mismatch between a constant and the column it is compared with.
class TypeError : public Error {
 public:
  using Error::Error;
};

/// Input that violates an operation's precondition (bad query id, bad batch shape, ...).
class PlanError : public Error {
 public:
  using Error::Error;
};

/// Rendered statement exceeds the dialect's query-string limit.
class SizeError : public Error {
 public:
  SizeError(std::size_t measured, std::size_t limit)
      : Error("rendered statement is " + std::to_string(measured) + " bytes, limit is " +
              std::to_string(limit)),
        measured_(measured),
        limit_(limit) {}

  std::size_t measured() const { return measured_; }
  std::size_t limit() const { return limit_; }

 private:
  std::size_t measured_;
  std::size_t limit_;
};

/// Failure raised while a backend executed a statement; carries the statement.
class BackendError : public Error {
 public:
  BackendError(const std::string& message, std::string sql)
      : Error(message), sql_(std::move(sql)) {}

  const std::string& sql() const { return sql_; }

 private:
  std::string sql_;
};

}  // namespace qshare
