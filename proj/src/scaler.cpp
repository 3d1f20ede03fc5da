#include "adpred/scaler.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "adpred/error.hpp"

namespace adpred {

ScalerParams fit_minmax(std::string column, std::span<const double> cells) {
  if (cells.empty()) {
    throw Error(ErrorKind::prep, fmt::format("cannot fit scaler for '{}' on no cells", column));
  }
  auto [lo, hi] = std::minmax_element(cells.begin(), cells.end());
  if (!std::isfinite(*lo) || !std::isfinite(*hi) ||
      std::any_of(cells.begin(), cells.end(), [](double v) { return !std::isfinite(v); })) {
    throw Error(ErrorKind::prep, fmt::format("non-finite value in column '{}'", column));
  }
  return {std::move(column), *lo, *hi};
}

double apply_minmax(const ScalerParams& params, double x) noexcept {
  if (!(params.max_x > params.min_x)) return 0.0;
  return std::clamp((x - params.min_x) / (params.max_x - params.min_x), 0.0, 1.0);
}

}  // namespace adpred
