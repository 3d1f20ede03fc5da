#include "adpred/error.hpp"

#include "adpred/hashing.hpp"

#include <fmt/format.h>

namespace adpred {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::usage: return "usage";
    case ErrorKind::io: return "io";
    case ErrorKind::schema: return "schema";
    case ErrorKind::parse: return "parse";
    case ErrorKind::prep: return "prep";
    case ErrorKind::model: return "model";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::mismatch: return "mismatch";
  }
  return "unknown";
}

std::string to_hex(std::uint64_t value) { return fmt::format("{:016x}", value); }

}  // namespace adpred
