#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adpred/table.hpp"

namespace adpred {

enum class ImputeStrategy { mean, median, zero, iterative };

std::string_view to_string(ImputeStrategy strategy) noexcept;
std::optional<ImputeStrategy> parse_impute_strategy(std::string_view text) noexcept;

/// Affine predictor of one column from all the other columns, in column
/// order with the target skipped.
struct LinearModel {
  double intercept = 0.0;
  std::vector<double> coefficients;
  /// Too few observed rows to fit; the column mean is used instead.
  bool mean_fallback = false;

  bool operator==(const LinearModel&) const = default;
};

struct ImputerModel {
  ImputeStrategy strategy = ImputeStrategy::iterative;
  std::vector<std::string> columns;
  std::vector<double> fallback;  // per-column replacement for constant strategies
  std::vector<double> means;
  std::vector<double> observed_min;
  std::vector<double> observed_max;

  // Iterative only.
  std::vector<LinearModel> models;
  int iteration_count = 10;
  double tolerance = 1e-3;
  int passes_run = 0;
  std::vector<double> pass_max_change;

  bool operator==(const ImputerModel&) const = default;
};

struct ImputerOptions {
  ImputeStrategy strategy = ImputeStrategy::iterative;
  int iteration_count = 10;
  double tolerance = 1e-3;
};

/// `columns[j]` holds every cell of column j; all columns have the same
/// length. Each column needs at least one observed cell, and the iterative
/// strategy needs at least two columns.
ImputerModel fit_imputer(std::vector<std::string> names,
                         const std::vector<NumericalCells>& columns,
                         const ImputerOptions& options);

/// Observed cells are copied unchanged. Throws Error(mismatch) when the
/// column count differs from the fitted model.
std::vector<std::vector<double>> impute(const ImputerModel& model,
                                        const std::vector<NumericalCells>& columns);

}  // namespace adpred
