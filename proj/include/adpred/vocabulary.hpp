#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adpred/table.hpp"

namespace adpred {

/// Contiguous re-coding of one categorical column. The k-th smallest
/// training token gets code k (1-based); code 0 stands for missing or
/// never-seen tokens.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::string column, std::vector<std::int64_t> sorted_tokens);

  const std::string& column() const noexcept { return column_; }
  std::int32_t size() const noexcept { return static_cast<std::int32_t>(tokens_.size()); }
  const std::vector<std::int64_t>& tokens() const noexcept { return tokens_; }

  std::int32_t encode(std::optional<std::int64_t> token) const noexcept;
  /// Inverse of encode on 1..size(); nullopt for 0 or out-of-range codes.
  std::optional<std::int64_t> decode(std::int32_t code) const noexcept;

  bool operator==(const Vocabulary&) const = default;

 private:
  std::string column_;
  std::vector<std::int64_t> tokens_;
};

/// Throws Error(prep) when every cell is missing.
Vocabulary fit_vocabulary(std::string column, const CategoricalCells& cells);

}  // namespace adpred
