#include "adpred/dataset.hpp"

#include "adpred/error.hpp"

namespace adpred {

std::optional<std::size_t> PreparedDataset::label_index(const std::string& name) const {
  for (std::size_t i = 0; i < label_columns.size(); ++i) {
    if (label_columns[i] == name) return i;
  }
  return std::nullopt;
}

PreparedDataset PreparedDataset::select(std::span<const std::size_t> rows) const {
  PreparedDataset out;
  out.categorical_columns = categorical_columns;
  out.vocab_sizes = vocab_sizes;
  out.binary_columns = binary_columns;
  out.numerical_columns = numerical_columns;
  out.label_columns = label_columns;

  const auto n = static_cast<Eigen::Index>(rows.size());
  out.categorical.resize(n, categorical.cols());
  out.binary.resize(n, binary.cols());
  out.numerical.resize(n, numerical.cols());
  out.labels.resize(n, labels.cols());
  out.row_ids.reserve(rows.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]);
    if (r >= static_cast<Eigen::Index>(n_rows())) throw Error(ErrorKind::usage, "row index out of range");
    out.categorical.row(i) = categorical.row(r);
    out.binary.row(i) = binary.row(r);
    out.numerical.row(i) = numerical.row(r);
    out.labels.row(i) = labels.row(r);
    out.row_ids.push_back(row_ids[static_cast<std::size_t>(r)]);
  }
  return out;
}

}  // namespace adpred
