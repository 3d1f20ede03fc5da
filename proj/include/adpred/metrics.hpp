#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace adpred {

inline constexpr double kDefaultThreshold = 0.5;
inline constexpr double kLogLossEps = 1e-15;

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const noexcept { return tp + fp + tn + fn; }
  ConfusionMatrix& operator+=(const ConfusionMatrix& other) noexcept;
  bool operator==(const ConfusionMatrix&) const = default;
};

/// A ratio whose denominator was zero is reported as 0 with its flag set.
struct MetricsReport {
  double log_loss = 0.0;
  double nir = 0.0;
  double accuracy = 0.0;
  double tpr = 0.0;
  double tnr = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  double threshold = kDefaultThreshold;
  std::size_t n = 0;
  ConfusionMatrix confusion;

  bool tpr_undefined = false;
  bool tnr_undefined = false;
  bool precision_undefined = false;
  bool f1_undefined = false;
};

/// Throws Error(usage) on empty or unequal inputs.
double log_loss(std::span<const double> labels, std::span<const double> probabilities,
                double eps = kLogLossEps);

/// Accuracy of always predicting the majority class.
double nir(std::span<const double> labels);

/// Predicts positive iff p >= threshold.
ConfusionMatrix confusion(std::span<const double> labels, std::span<const double> probabilities,
                          double threshold = kDefaultThreshold);

MetricsReport report(std::span<const double> labels, std::span<const double> probabilities,
                     double threshold = kDefaultThreshold);

/// One column of a rendered table.
struct ReportColumn {
  std::string title;
  MetricsReport metrics;
};

/// Metric rows by dataset columns, aligned, with a title line.
std::string render_table(const std::string& title, const std::vector<ReportColumn>& columns);

/// Tab-separated lines: block, column, metric, value. Undefined ratios are
/// marked by a trailing "undefined" field.
std::string render_records(const std::string& block, const std::vector<ReportColumn>& columns);

}  // namespace adpred
