#include "adpred/vocabulary.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "adpred/error.hpp"

namespace adpred {

Vocabulary::Vocabulary(std::string column, std::vector<std::int64_t> sorted_tokens)
    : column_(std::move(column)), tokens_(std::move(sorted_tokens)) {
  if (!std::is_sorted(tokens_.begin(), tokens_.end()) ||
      std::adjacent_find(tokens_.begin(), tokens_.end()) != tokens_.end()) {
    throw Error(ErrorKind::prep,
                fmt::format("vocabulary for '{}' must be strictly ascending", column_));
  }
}

std::int32_t Vocabulary::encode(std::optional<std::int64_t> token) const noexcept {
  if (!token) return 0;
  auto it = std::lower_bound(tokens_.begin(), tokens_.end(), *token);
  if (it == tokens_.end() || *it != *token) return 0;
  return static_cast<std::int32_t>(it - tokens_.begin()) + 1;
}

std::optional<std::int64_t> Vocabulary::decode(std::int32_t code) const noexcept {
  if (code < 1 || code > size()) return std::nullopt;
  return tokens_[static_cast<std::size_t>(code - 1)];
}

Vocabulary fit_vocabulary(std::string column, const CategoricalCells& cells) {
  std::vector<std::int64_t> tokens;
  tokens.reserve(cells.size());
  for (const auto& cell : cells) {
    if (cell) tokens.push_back(*cell);
  }
  if (tokens.empty()) {
    throw Error(ErrorKind::prep,
                fmt::format("categorical column '{}' has no observed values", column));
  }
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  return Vocabulary(std::move(column), std::move(tokens));
}

}  // namespace adpred
