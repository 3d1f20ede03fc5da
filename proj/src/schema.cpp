#include "adpred/schema.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>

#include "adpred/error.hpp"
#include "text_util.hpp"

namespace adpred {

std::string_view to_string(Role role) noexcept {
  switch (role) {
    case Role::row_id: return "row_id";
    case Role::categorical: return "categorical";
    case Role::binary: return "binary";
    case Role::numerical: return "numerical";
    case Role::label: return "label";
    case Role::ignored: return "ignored";
  }
  return "ignored";
}

std::optional<Role> parse_role(std::string_view text) noexcept {
  for (Role role : {Role::row_id, Role::categorical, Role::binary, Role::numerical,
                    Role::label, Role::ignored}) {
    if (text == to_string(role)) return role;
  }
  return std::nullopt;
}

void FeatureSchema::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& column : columns) {
    if (column.name.empty()) throw Error(ErrorKind::schema, "empty column name");
    if (column.name.find_first_of(" \t\r\n#=") != std::string::npos) {
      throw Error(ErrorKind::schema,
                  fmt::format("column name '{}' contains whitespace, '#' or '='", column.name));
    }
    if (!seen.insert(column.name).second) {
      throw Error(ErrorKind::schema, fmt::format("duplicate column '{}'", column.name));
    }
  }
  if (count(Role::label) == 0) throw Error(ErrorKind::schema, "schema declares no label column");
  const bool has_feature = std::any_of(columns.begin(), columns.end(),
                                       [](const ColumnSpec& c) { return is_feature(c.role); });
  if (!has_feature) throw Error(ErrorKind::schema, "schema declares no feature column");
  if (count(Role::row_id) > 1) throw Error(ErrorKind::schema, "at most one row_id column");
  if (delimiter == '\n' || delimiter == '\r') {
    throw Error(ErrorKind::schema, "delimiter cannot be a line break");
  }
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return i;
  }
  return std::nullopt;
}

std::vector<std::string> FeatureSchema::names_with_role(Role role) const {
  std::vector<std::string> names;
  for (const auto& column : columns) {
    if (column.role == role) names.push_back(column.name);
  }
  return names;
}

std::size_t FeatureSchema::count(Role role) const {
  return static_cast<std::size_t>(std::count_if(
      columns.begin(), columns.end(), [role](const ColumnSpec& c) { return c.role == role; }));
}

namespace {

char parse_delimiter(std::string_view value, std::size_t line) {
  if (value == "tab" || value == "\\t") return '\t';
  if (value == "comma") return ',';
  if (value == "space") return ' ';
  if (value == "semicolon") return ';';
  if (value == "pipe") return '|';
  if (value.size() == 1) return value[0];
  throw Error(ErrorKind::schema, fmt::format("line {}: bad delimiter '{}'", line, value));
}

std::string delimiter_name(char delimiter) {
  switch (delimiter) {
    case '\t': return "tab";
    case ',': return "comma";
    case ' ': return "space";
    case ';': return "semicolon";
    case '|': return "pipe";
    default: return std::string(1, delimiter);
  }
}

}  // namespace

FeatureSchema parse_schema(std::string_view text) {
  FeatureSchema schema;
  std::size_t line_no = 0;
  for (std::string_view line : detail::split_lines(text)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::schema, fmt::format("line {}: expected 'key = value'", line_no));
    }
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    if (key == "delimiter") {
      schema.delimiter = parse_delimiter(value, line_no);
    } else if (key == "has_header") {
      auto flag = detail::parse_bool(value);
      if (!flag) throw Error(ErrorKind::schema, fmt::format("line {}: bad boolean", line_no));
      schema.has_header = *flag;
    } else {
      auto role = parse_role(value);
      if (!role) {
        throw Error(ErrorKind::schema,
                    fmt::format("line {}: unknown role '{}' for column '{}'", line_no, value, key));
      }
      schema.columns.push_back({std::string(key), *role});
    }
  }
  schema.validate();
  return schema;
}

FeatureSchema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, fmt::format("cannot open schema file '{}'", path));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_schema(buffer.str());
}

std::string serialize_schema(const FeatureSchema& schema) {
  std::string out;
  out += fmt::format("delimiter = {}\n", delimiter_name(schema.delimiter));
  out += fmt::format("has_header = {}\n", schema.has_header ? "true" : "false");
  for (const auto& column : schema.columns) {
    out += fmt::format("{} = {}\n", column.name, to_string(column.role));
  }
  return out;
}

}  // namespace adpred
