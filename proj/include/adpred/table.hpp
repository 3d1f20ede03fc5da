#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "adpred/schema.hpp"

namespace adpred {

using CategoricalCells = std::vector<std::optional<std::int64_t>>;
using BinaryCells = std::vector<std::optional<std::uint8_t>>;
using NumericalCells = std::vector<std::optional<double>>;
using LabelCells = std::vector<std::uint8_t>;
using TextCells = std::vector<std::string>;

using ColumnCells =
    std::variant<CategoricalCells, BinaryCells, NumericalCells, LabelCells, TextCells>;

struct LoadStats {
  std::size_t non_integer_categoricals = 0;
  std::size_t unparsable_numericals = 0;
};

/// Immutable column-major table. `schema.columns` lists exactly the columns
/// present, so a test file without label columns has no label entries.
class RawTable {
 public:
  RawTable() = default;
  RawTable(FeatureSchema schema, std::size_t n_rows, std::vector<ColumnCells> cells,
           LoadStats stats = {});

  const FeatureSchema& schema() const noexcept { return schema_; }
  std::size_t n_rows() const noexcept { return n_rows_; }
  std::size_t n_columns() const noexcept { return cells_.size(); }
  const LoadStats& load_stats() const noexcept { return stats_; }

  const ColumnSpec& spec(std::size_t column) const { return schema_.columns.at(column); }
  const ColumnCells& cells(std::size_t column) const { return cells_.at(column); }
  /// Throws Error(schema) when the column is absent.
  const ColumnCells& cells(const std::string& name) const;
  bool has_column(const std::string& name) const;

  bool has_labels() const { return schema_.count(Role::label) > 0; }

  /// Identifier of each row: the row_id column when present, else the
  /// zero-based row index.
  std::vector<std::string> row_ids() const;

  bool operator==(const RawTable& other) const {
    return schema_ == other.schema_ && n_rows_ == other.n_rows_ && cells_ == other.cells_;
  }

 private:
  FeatureSchema schema_;
  std::size_t n_rows_ = 0;
  std::vector<ColumnCells> cells_;
  LoadStats stats_;
};

/// Parses a delimited file. The file may carry every schema column or every
/// non-label column (an unlabeled test file); which one is decided by the
/// first data row and enforced on the rest.
RawTable load_table(const std::string& path, const FeatureSchema& schema);
RawTable read_table(std::istream& in, const FeatureSchema& schema);

/// Writes with the schema's delimiter. Reals use the shortest round-trip
/// representation; missing cells are empty fields.
void write_table(std::ostream& out, const RawTable& table);

/// Feature columns whose non-missing cells take at most one distinct value.
std::vector<std::string> detect_constant_features(const RawTable& table);

/// Throws Error(schema) for unknown names and for label columns.
RawTable drop_columns(const RawTable& table, const std::vector<std::string>& names);

}  // namespace adpred
