#pragma once

#include <stdexcept>
#include <string>

namespace adpred {

// Category of a failure. Rendered as a stable prefix by the CLI so that
// callers can parse the reason without scraping the message.
enum class ErrorKind {
  usage,
  io,
  schema,
  parse,
  prep,
  model,
  numeric,
  mismatch,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace adpred
