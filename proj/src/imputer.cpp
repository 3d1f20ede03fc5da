#include "adpred/imputer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "adpred/error.hpp"

namespace adpred {

std::string_view to_string(ImputeStrategy strategy) noexcept {
  switch (strategy) {
    case ImputeStrategy::mean: return "mean";
    case ImputeStrategy::median: return "median";
    case ImputeStrategy::zero: return "zero";
    case ImputeStrategy::iterative: return "iterative";
  }
  return "mean";
}

std::optional<ImputeStrategy> parse_impute_strategy(std::string_view text) noexcept {
  for (auto s : {ImputeStrategy::mean, ImputeStrategy::median, ImputeStrategy::zero,
                 ImputeStrategy::iterative}) {
    if (text == to_string(s)) return s;
  }
  return std::nullopt;
}

namespace {

std::vector<double> observed(const NumericalCells& cells) {
  std::vector<double> values;
  values.reserve(cells.size());
  for (const auto& cell : cells) {
    if (cell) values.push_back(*cell);
  }
  return values;
}

double median_of(std::vector<double> values) {
  const auto n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

double predict(const LinearModel& model, double mean, const Eigen::MatrixXd& filled,
               Eigen::Index row, Eigen::Index target) {
  if (model.mean_fallback) return mean;
  double value = model.intercept;
  std::size_t k = 0;
  for (Eigen::Index c = 0; c < filled.cols(); ++c) {
    if (c == target) continue;
    value += model.coefficients[k++] * filled(row, c);
  }
  return value;
}

// Least squares of column `target` on every other column plus an intercept,
// restricted to `rows`.
LinearModel fit_linear(const Eigen::MatrixXd& filled, Eigen::Index target,
                       const std::vector<Eigen::Index>& rows) {
  const Eigen::Index p = filled.cols();
  LinearModel model;
  if (static_cast<Eigen::Index>(rows.size()) < p) {
    model.mean_fallback = true;
    return model;
  }
  Eigen::MatrixXd design(static_cast<Eigen::Index>(rows.size()), p);
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    const Eigen::Index r = rows[static_cast<std::size_t>(i)];
    design(i, 0) = 1.0;
    Eigen::Index k = 1;
    for (Eigen::Index c = 0; c < p; ++c) {
      if (c != target) design(i, k++) = filled(r, c);
    }
    y(i) = filled(r, target);
  }
  Eigen::VectorXd beta = design.colPivHouseholderQr().solve(y);
  if (!beta.allFinite()) {
    model.mean_fallback = true;
    return model;
  }
  model.intercept = beta(0);
  model.coefficients.assign(beta.data() + 1, beta.data() + p);
  return model;
}

void check_shape(const std::vector<NumericalCells>& columns, std::size_t expected_columns) {
  if (columns.size() != expected_columns) {
    throw Error(ErrorKind::mismatch, fmt::format("imputer expects {} columns, got {}",
                                                 expected_columns, columns.size()));
  }
  for (const auto& column : columns) {
    if (column.size() != columns.front().size()) {
      throw Error(ErrorKind::mismatch, "imputer columns have different lengths");
    }
  }
}

}  // namespace

ImputerModel fit_imputer(std::vector<std::string> names, const std::vector<NumericalCells>& columns,
                         const ImputerOptions& options) {
  check_shape(columns, columns.size());
  if (names.size() != columns.size()) {
    throw Error(ErrorKind::mismatch, "imputer names and columns differ in count");
  }
  ImputerModel model;
  model.strategy = options.strategy;
  model.columns = std::move(names);
  model.iteration_count = options.iteration_count;
  model.tolerance = options.tolerance;

  const std::size_t p = columns.size();
  for (std::size_t j = 0; j < p; ++j) {
    auto values = observed(columns[j]);
    if (values.empty()) {
      throw Error(ErrorKind::prep,
                  fmt::format("numerical column '{}' has no observed values", model.columns[j]));
    }
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) /
                        static_cast<double>(values.size());
    auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    model.means.push_back(mean);
    model.observed_min.push_back(*lo);
    model.observed_max.push_back(*hi);
    switch (options.strategy) {
      case ImputeStrategy::mean: model.fallback.push_back(mean); break;
      case ImputeStrategy::median: model.fallback.push_back(median_of(std::move(values))); break;
      case ImputeStrategy::zero: model.fallback.push_back(0.0); break;
      case ImputeStrategy::iterative: model.fallback.push_back(mean); break;
    }
  }
  if (options.strategy != ImputeStrategy::iterative) return model;

  if (p < 2) throw Error(ErrorKind::prep, "iterative imputation needs at least two numerical columns");
  if (options.iteration_count < 1 || !(options.tolerance > 0.0)) {
    throw Error(ErrorKind::prep, "iterative imputation needs iteration_count >= 1 and tolerance > 0");
  }

  const auto n = static_cast<Eigen::Index>(columns.front().size());
  Eigen::MatrixXd filled(n, static_cast<Eigen::Index>(p));
  std::vector<std::vector<Eigen::Index>> observed_rows(p), missing_rows(p);
  for (std::size_t j = 0; j < p; ++j) {
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto& cell = columns[j][static_cast<std::size_t>(r)];
      filled(r, static_cast<Eigen::Index>(j)) = cell ? *cell : model.means[j];
      (cell ? observed_rows[j] : missing_rows[j]).push_back(r);
    }
  }

  model.models.assign(p, LinearModel{});
  for (int pass = 0; pass < options.iteration_count; ++pass) {
    double max_change = 0.0;
    bool any_target = false;
    for (std::size_t j = 0; j < p; ++j) {
      if (missing_rows[j].empty()) continue;
      any_target = true;
      const auto target = static_cast<Eigen::Index>(j);
      model.models[j] = fit_linear(filled, target, observed_rows[j]);
      for (Eigen::Index r : missing_rows[j]) {
        double value = predict(model.models[j], model.means[j], filled, r, target);
        value = std::clamp(value, model.observed_min[j], model.observed_max[j]);
        max_change = std::max(max_change, std::abs(value - filled(r, target)));
        filled(r, target) = value;
      }
    }
    if (!any_target) break;
    model.passes_run = pass + 1;
    model.pass_max_change.push_back(max_change);
    if (max_change < options.tolerance) break;
  }

  // Columns complete in training still get a model so that transform-time
  // gaps in them can be filled.
  for (std::size_t j = 0; j < p; ++j) {
    if (missing_rows[j].empty()) {
      model.models[j] = fit_linear(filled, static_cast<Eigen::Index>(j), observed_rows[j]);
    }
  }
  return model;
}

std::vector<std::vector<double>> impute(const ImputerModel& model,
                                        const std::vector<NumericalCells>& columns) {
  check_shape(columns, model.columns.size());
  const std::size_t p = columns.size();
  const std::size_t n = p ? columns.front().size() : 0;

  std::vector<std::vector<double>> out(p, std::vector<double>(n));
  if (model.strategy != ImputeStrategy::iterative) {
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t r = 0; r < n; ++r) {
        const auto& cell = columns[j][r];
        out[j][r] = cell ? *cell : model.fallback[j];
      }
    }
    return out;
  }

  if (model.models.size() != p) throw Error(ErrorKind::prep, "iterative imputer is not fitted");
  // One row at a time: other gaps in the row are mean-filled before each
  // column's prediction.
  Eigen::MatrixXd row(1, static_cast<Eigen::Index>(p));
  for (std::size_t r = 0; r < n; ++r) {
    bool any_missing = false;
    for (std::size_t j = 0; j < p; ++j) {
      const auto& cell = columns[j][r];
      row(0, static_cast<Eigen::Index>(j)) = cell ? *cell : model.means[j];
      out[j][r] = cell ? *cell : model.means[j];
      any_missing = any_missing || !cell;
    }
    if (!any_missing) continue;
    for (std::size_t j = 0; j < p; ++j) {
      if (columns[j][r]) continue;
      const double value = predict(model.models[j], model.means[j], row, 0,
                                   static_cast<Eigen::Index>(j));
      out[j][r] = std::clamp(value, model.observed_min[j], model.observed_max[j]);
    }
  }
  return out;
}

}  // namespace adpred
