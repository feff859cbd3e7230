#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace exguard {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- knowledge base ----

class MalformedClause : public Error {
 public:
  using Error::Error;
};

class PageStructureError : public Error {
 public:
  using Error::Error;
};

class FormatVersionMismatch : public Error {
 public:
  using Error::Error;
};

/// A KB file record that violates the schema; `record()` holds the offending JSON.
class SchemaViolation : public Error {
 public:
  SchemaViolation(const std::string& what, std::string record)
      : Error(what + ": " + record), record_(std::move(record)) {}
  const std::string& record() const noexcept { return record_; }

 private:
  std::string record_;
};

// ---- java analysis ----

class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
        message_(message),
        line_(line),
        column_(column) {}

  const std::string& message() const noexcept { return message_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::string message_;
  std::size_t line_;
  std::size_t column_;
};

class UnresolvedCall : public Error {
 public:
  using Error::Error;
};

class NoRelevantApis : public Error {
 public:
  using Error::Error;
};

// ---- prompts / chain ----

class EmptyItems : public Error {
 public:
  using Error::Error;
};

// ---- llm client ----

class ReplayMiss : public Error {
 public:
  explicit ReplayMiss(std::string digest)
      : Error("cassette has no entry for request " + digest), digest_(std::move(digest)) {}
  const std::string& digest() const noexcept { return digest_; }

 private:
  std::string digest_;
};

class TransportError : public Error {
 public:
  TransportError(const std::string& what, int retries)
      : Error(what + " (after " + std::to_string(retries) + " retries)"), retries_(retries) {}
  int retries() const noexcept { return retries_; }

 private:
  int retries_;
};

class EndpointError : public Error {
 public:
  EndpointError(int status, std::string body_excerpt)
      : Error("endpoint returned HTTP " + std::to_string(status) + ": " + body_excerpt),
        status_(status),
        body_excerpt_(std::move(body_excerpt)) {}
  int status() const noexcept { return status_; }
  const std::string& body_excerpt() const noexcept { return body_excerpt_; }

 private:
  int status_;
  std::string body_excerpt_;
};

// ---- evaluation ----

class EmptyResults : public Error {
 public:
  using Error::Error;
};

class UnparseableVerdict : public Error {
 public:
  using Error::Error;
};

}  // namespace exguard
