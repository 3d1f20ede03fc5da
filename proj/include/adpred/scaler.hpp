#pragma once

#include <span>
#include <string>

namespace adpred {

struct ScalerParams {
  std::string column;
  double min_x = 0.0;
  double max_x = 0.0;

  bool operator==(const ScalerParams&) const = default;
};

/// Throws Error(prep) on empty input or non-finite cells.
ScalerParams fit_minmax(std::string column, std::span<const double> cells);

/// (x - min) / (max - min) clipped to [0, 1]; 0 for a degenerate range.
double apply_minmax(const ScalerParams& params, double x) noexcept;

}  // namespace adpred
