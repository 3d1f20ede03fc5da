#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace adpred {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CodeMatrix = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Model-ready blocks, one row per example. Categorical codes lie in
/// [0, vocab_sizes[c]] with 0 meaning missing or unseen; numerical cells lie
/// in [0, 1]; no cell is missing.
struct PreparedDataset {
  std::vector<std::string> categorical_columns;
  std::vector<std::int32_t> vocab_sizes;
  std::vector<std::string> binary_columns;
  std::vector<std::string> numerical_columns;
  std::vector<std::string> label_columns;

  CodeMatrix categorical;
  RowMatrix binary;
  RowMatrix numerical;
  RowMatrix labels;  // zero columns for unlabeled data
  std::vector<std::string> row_ids;

  std::size_t n_rows() const noexcept { return row_ids.size(); }
  bool has_labels() const noexcept { return !label_columns.empty(); }
  std::optional<std::size_t> label_index(const std::string& name) const;

  /// Rows in the given order; duplicates allowed.
  PreparedDataset select(std::span<const std::size_t> rows) const;
};

}  // namespace adpred
