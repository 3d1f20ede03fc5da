#include "adpred/table.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_set>

#include <fmt/format.h>

#include "adpred/error.hpp"
#include "text_util.hpp"

namespace adpred {

namespace {

ColumnCells empty_cells(Role role) {
  switch (role) {
    case Role::categorical: return CategoricalCells{};
    case Role::binary: return BinaryCells{};
    case Role::numerical: return NumericalCells{};
    case Role::label: return LabelCells{};
    case Role::row_id:
    case Role::ignored: return TextCells{};
  }
  return TextCells{};
}

bool role_matches(Role role, const ColumnCells& cells) {
  switch (role) {
    case Role::categorical: return std::holds_alternative<CategoricalCells>(cells);
    case Role::binary: return std::holds_alternative<BinaryCells>(cells);
    case Role::numerical: return std::holds_alternative<NumericalCells>(cells);
    case Role::label: return std::holds_alternative<LabelCells>(cells);
    case Role::row_id:
    case Role::ignored: return std::holds_alternative<TextCells>(cells);
  }
  return false;
}

std::size_t cell_count(const ColumnCells& cells) {
  return std::visit([](const auto& v) { return v.size(); }, cells);
}

// Schema restricted to the columns actually present in a file.
FeatureSchema without_labels(const FeatureSchema& schema) {
  FeatureSchema out = schema;
  std::erase_if(out.columns, [](const ColumnSpec& c) { return c.role == Role::label; });
  return out;
}

}  // namespace

RawTable::RawTable(FeatureSchema schema, std::size_t n_rows, std::vector<ColumnCells> cells,
                   LoadStats stats)
    : schema_(std::move(schema)), n_rows_(n_rows), cells_(std::move(cells)), stats_(stats) {
  if (cells_.size() != schema_.columns.size()) {
    throw Error(ErrorKind::schema, "column count does not match schema");
  }
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    if (!role_matches(schema_.columns[i].role, cells_[i])) {
      throw Error(ErrorKind::schema,
                  fmt::format("column '{}' cells do not match its role", schema_.columns[i].name));
    }
    if (cell_count(cells_[i]) != n_rows_) {
      throw Error(ErrorKind::schema,
                  fmt::format("column '{}' has {} cells, expected {}", schema_.columns[i].name,
                              cell_count(cells_[i]), n_rows_));
    }
  }
}

const ColumnCells& RawTable::cells(const std::string& name) const {
  auto index = schema_.index_of(name);
  if (!index) throw Error(ErrorKind::schema, fmt::format("no column '{}'", name));
  return cells_[*index];
}

bool RawTable::has_column(const std::string& name) const {
  return schema_.index_of(name).has_value();
}

std::vector<std::string> RawTable::row_ids() const {
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    if (schema_.columns[i].role == Role::row_id) return std::get<TextCells>(cells_[i]);
  }
  std::vector<std::string> ids(n_rows_);
  for (std::size_t r = 0; r < n_rows_; ++r) ids[r] = std::to_string(r);
  return ids;
}

RawTable read_table(std::istream& in, const FeatureSchema& declared) {
  declared.validate();
  const FeatureSchema unlabeled = without_labels(declared);

  std::string line;
  std::vector<std::string_view> fields;
  std::size_t line_no = 0;
  const FeatureSchema* layout = nullptr;

  if (declared.has_header) {
    if (!std::getline(in, line)) throw Error(ErrorKind::parse, "line 1: missing header");
    ++line_no;
    detail::split_fields(line, declared.delimiter, fields);
    auto matches = [&](const FeatureSchema& s) {
      if (fields.size() != s.columns.size()) return false;
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (detail::trim(fields[i]) != s.columns[i].name) return false;
      }
      return true;
    };
    if (matches(declared)) {
      layout = &declared;
    } else if (matches(unlabeled)) {
      layout = &unlabeled;
    } else {
      throw Error(ErrorKind::parse, "line 1: header does not match the schema column order");
    }
  }

  std::vector<ColumnCells> cells;
  LoadStats stats;
  std::size_t n_rows = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    detail::split_fields(line, declared.delimiter, fields);
    if (!layout) {
      if (fields.size() == declared.columns.size()) {
        layout = &declared;
      } else if (fields.size() == unlabeled.columns.size()) {
        layout = &unlabeled;
      }
    }
    if (!layout || fields.size() != layout->columns.size()) {
      throw Error(ErrorKind::parse,
                  fmt::format("line {}: expected {} fields, found {}", line_no,
                              layout ? layout->columns.size() : declared.columns.size(),
                              fields.size()));
    }
    if (cells.empty()) {
      for (const auto& column : layout->columns) cells.push_back(empty_cells(column.role));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto& column = layout->columns[c];
      const std::string_view field = detail::trim(fields[c]);
      switch (column.role) {
        case Role::categorical: {
          std::optional<std::int64_t> token;
          if (!field.empty()) {
            token = detail::parse_int(field);
            if (!token) ++stats.non_integer_categoricals;
          }
          std::get<CategoricalCells>(cells[c]).push_back(token);
          break;
        }
        case Role::numerical: {
          std::optional<double> value;
          if (!field.empty()) {
            value = detail::parse_real(field);
            if (!value) ++stats.unparsable_numericals;
          }
          std::get<NumericalCells>(cells[c]).push_back(value);
          break;
        }
        case Role::binary: {
          std::optional<std::uint8_t> bit;
          if (!field.empty()) {
            if (field != "0" && field != "1") {
              throw Error(ErrorKind::parse,
                          fmt::format("line {}: binary column '{}' has value '{}'", line_no,
                                      column.name, field));
            }
            bit = static_cast<std::uint8_t>(field[0] - '0');
          }
          std::get<BinaryCells>(cells[c]).push_back(bit);
          break;
        }
        case Role::label: {
          if (field != "0" && field != "1") {
            throw Error(ErrorKind::parse,
                        fmt::format("line {}: label column '{}' has value '{}'", line_no,
                                    column.name, field));
          }
          std::get<LabelCells>(cells[c]).push_back(static_cast<std::uint8_t>(field[0] - '0'));
          break;
        }
        case Role::row_id:
        case Role::ignored:
          std::get<TextCells>(cells[c]).emplace_back(field);
          break;
      }
    }
    ++n_rows;
  }

  if (!layout) layout = &declared;
  if (cells.empty()) {
    for (const auto& column : layout->columns) cells.push_back(empty_cells(column.role));
  }
  return RawTable(*layout, n_rows, std::move(cells), stats);
}

RawTable load_table(const std::string& path, const FeatureSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, fmt::format("cannot open '{}'", path));
  return read_table(in, schema);
}

void write_table(std::ostream& out, const RawTable& table) {
  const auto& schema = table.schema();
  const char delim = schema.delimiter;
  if (schema.has_header) {
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
      if (c) out << delim;
      out << schema.columns[c].name;
    }
    out << '\n';
  }
  std::string row;
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    row.clear();
    for (std::size_t c = 0; c < table.n_columns(); ++c) {
      if (c) row += delim;
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, CategoricalCells>) {
              if (v[r]) row += std::to_string(*v[r]);
            } else if constexpr (std::is_same_v<T, NumericalCells>) {
              if (v[r]) row += detail::format_real(*v[r]);
            } else if constexpr (std::is_same_v<T, BinaryCells>) {
              if (v[r]) row += static_cast<char>('0' + *v[r]);
            } else if constexpr (std::is_same_v<T, LabelCells>) {
              row += static_cast<char>('0' + v[r]);
            } else {
              row += v[r];
            }
          },
          table.cells(c));
    }
    row += '\n';
    out << row;
  }
}

std::vector<std::string> detect_constant_features(const RawTable& table) {
  std::vector<std::string> constant;
  for (std::size_t c = 0; c < table.n_columns(); ++c) {
    const auto& spec = table.spec(c);
    if (!is_feature(spec.role)) continue;
    const bool is_constant = std::visit(
        [](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, CategoricalCells> || std::is_same_v<T, BinaryCells> ||
                        std::is_same_v<T, NumericalCells>) {
            const typename T::value_type* first = nullptr;
            for (const auto& cell : v) {
              if (!cell) continue;
              if (!first) {
                first = &cell;
              } else if (*cell != **first) {
                return false;
              }
            }
            return true;
          } else {
            return false;
          }
        },
        table.cells(c));
    if (is_constant) constant.push_back(spec.name);
  }
  return constant;
}

RawTable drop_columns(const RawTable& table, const std::vector<std::string>& names) {
  std::unordered_set<std::string> to_drop;
  for (const auto& name : names) {
    auto index = table.schema().index_of(name);
    if (!index) throw Error(ErrorKind::schema, fmt::format("cannot drop unknown column '{}'", name));
    if (table.spec(*index).role == Role::label) {
      throw Error(ErrorKind::schema, fmt::format("cannot drop label column '{}'", name));
    }
    to_drop.insert(name);
  }
  FeatureSchema schema = table.schema();
  schema.columns.clear();
  std::vector<ColumnCells> cells;
  for (std::size_t c = 0; c < table.n_columns(); ++c) {
    if (to_drop.count(table.spec(c).name)) continue;
    schema.columns.push_back(table.spec(c));
    cells.push_back(table.cells(c));
  }
  return RawTable(std::move(schema), table.n_rows(), std::move(cells), table.load_stats());
}

}  // namespace adpred
