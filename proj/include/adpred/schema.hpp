#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace adpred {

enum class Role {
  row_id,
  categorical,
  binary,
  numerical,
  label,
  ignored,
};

std::string_view to_string(Role role) noexcept;
std::optional<Role> parse_role(std::string_view text) noexcept;

inline bool is_feature(Role role) noexcept {
  return role == Role::categorical || role == Role::binary || role == Role::numerical;
}

struct ColumnSpec {
  std::string name;
  Role role = Role::ignored;

  bool operator==(const ColumnSpec&) const = default;
};

/// Ordered column declaration driving ingestion and preprocessing.
///
/// Text form, one entry per line (`#` starts a comment):
///
///     delimiter = tab
///     has_header = true
///     f_0 = row_id
///     f_2 = categorical
///     is_installed = label
///
/// Column entries keep file order. `delimiter` accepts `tab`, `comma`,
/// `space`, `semicolon`, `pipe` or any single character.
struct FeatureSchema {
  std::vector<ColumnSpec> columns;
  char delimiter = '\t';
  bool has_header = true;

  /// Throws Error(schema) unless names are unique and there is at least one
  /// label and one feature column.
  void validate() const;

  std::optional<std::size_t> index_of(std::string_view name) const;
  std::vector<std::string> names_with_role(Role role) const;
  std::size_t count(Role role) const;

  bool operator==(const FeatureSchema&) const = default;
};

FeatureSchema parse_schema(std::string_view text);
FeatureSchema load_schema(const std::string& path);
std::string serialize_schema(const FeatureSchema& schema);

}  // namespace adpred
