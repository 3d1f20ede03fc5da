#include "adpred/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "adpred/error.hpp"

namespace adpred {

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) noexcept {
  tp += other.tp;
  fp += other.fp;
  tn += other.tn;
  fn += other.fn;
  return *this;
}

namespace {

void check_inputs(std::span<const double> labels, std::span<const double> probabilities) {
  if (labels.empty()) throw Error(ErrorKind::usage, "metrics need at least one row");
  if (labels.size() != probabilities.size()) {
    throw Error(ErrorKind::mismatch, fmt::format("{} labels but {} predictions", labels.size(),
                                                 probabilities.size()));
  }
}

double ratio(std::uint64_t num, std::uint64_t den, bool& undefined) {
  undefined = den == 0;
  return undefined ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double log_loss(std::span<const double> labels, std::span<const double> probabilities, double eps) {
  check_inputs(labels, probabilities);
  // Neumaier summation; large evaluation sets otherwise drift by ~1e-12.
  double sum = 0.0, carry = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = std::clamp(probabilities[i], eps, 1.0 - eps);
    const double term = labels[i] > 0.5 ? std::log(p) : std::log(1.0 - p);
    const double t = sum + term;
    carry += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
    sum = t;
  }
  return -(sum + carry) / static_cast<double>(labels.size());
}

double nir(std::span<const double> labels) {
  if (labels.empty()) throw Error(ErrorKind::usage, "metrics need at least one row");
  const auto ones = static_cast<std::size_t>(
      std::count_if(labels.begin(), labels.end(), [](double y) { return y > 0.5; }));
  return static_cast<double>(std::max(ones, labels.size() - ones)) /
         static_cast<double>(labels.size());
}

ConfusionMatrix confusion(std::span<const double> labels, std::span<const double> probabilities,
                          double threshold) {
  check_inputs(labels, probabilities);
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool actual = labels[i] > 0.5;
    const bool predicted = probabilities[i] >= threshold;
    if (actual) {
      (predicted ? cm.tp : cm.fn) += 1;
    } else {
      (predicted ? cm.fp : cm.tn) += 1;
    }
  }
  return cm;
}

MetricsReport report(std::span<const double> labels, std::span<const double> probabilities,
                     double threshold) {
  MetricsReport r;
  r.threshold = threshold;
  r.n = labels.size();
  r.log_loss = log_loss(labels, probabilities);
  r.nir = nir(labels);
  r.confusion = confusion(labels, probabilities, threshold);
  const auto& cm = r.confusion;
  bool unused = false;
  r.accuracy = ratio(cm.tp + cm.tn, cm.total(), unused);
  r.tpr = ratio(cm.tp, cm.tp + cm.fn, r.tpr_undefined);
  r.tnr = ratio(cm.tn, cm.tn + cm.fp, r.tnr_undefined);
  r.precision = ratio(cm.tp, cm.tp + cm.fp, r.precision_undefined);
  const double denom = r.precision + r.tpr;
  r.f1_undefined = r.precision_undefined || r.tpr_undefined || denom == 0.0;
  r.f1 = r.f1_undefined ? 0.0 : 2.0 * r.precision * r.tpr / denom;
  return r;
}

namespace {

struct Row {
  const char* label;
  const char* key;
  double MetricsReport::*value;
  bool MetricsReport::*undefined;
};

constexpr Row kRows[] = {
    {"Log-Loss", "log_loss", &MetricsReport::log_loss, nullptr},
    {"NIR", "nir", &MetricsReport::nir, nullptr},
    {"Accuracy", "accuracy", &MetricsReport::accuracy, nullptr},
    {"TPR (Recall)", "tpr", &MetricsReport::tpr, &MetricsReport::tpr_undefined},
    {"TNR (Specificity)", "tnr", &MetricsReport::tnr, &MetricsReport::tnr_undefined},
    {"Precision", "precision", &MetricsReport::precision, &MetricsReport::precision_undefined},
    {"F1 Score", "f1", &MetricsReport::f1, &MetricsReport::f1_undefined},
};

}  // namespace

std::string render_table(const std::string& title, const std::vector<ReportColumn>& columns) {
  std::size_t label_width = 0;
  for (const auto& row : kRows) label_width = std::max(label_width, std::string(row.label).size());
  std::vector<std::size_t> widths;
  for (const auto& c : columns) widths.push_back(std::max<std::size_t>(c.title.size(), 8));

  std::string out = title + "\n";
  out += fmt::format("{:<{}}", "", label_width);
  for (std::size_t i = 0; i < columns.size(); ++i) {
    out += fmt::format("  {:>{}}", columns[i].title, widths[i]);
  }
  out += "\n";
  for (const auto& row : kRows) {
    out += fmt::format("{:<{}}", row.label, label_width);
    for (std::size_t i = 0; i < columns.size(); ++i) {
      const auto& m = columns[i].metrics;
      const bool undefined = row.undefined && m.*(row.undefined);
      const auto cell = undefined ? std::string("n/a") : fmt::format("{:.4f}", m.*(row.value));
      out += fmt::format("  {:>{}}", cell, widths[i]);
    }
    out += "\n";
  }
  return out;
}

std::string render_records(const std::string& block, const std::vector<ReportColumn>& columns) {
  std::string out;
  for (const auto& c : columns) {
    for (const auto& row : kRows) {
      const auto& m = c.metrics;
      out += fmt::format("{}\t{}\t{}\t{:.17g}", block, c.title, row.key, m.*(row.value));
      if (row.undefined && m.*(row.undefined)) out += "\tundefined";
      out += "\n";
    }
    out += fmt::format("{}\t{}\tn\t{}\n", block, c.title, c.metrics.n);
    out += fmt::format("{}\t{}\tthreshold\t{:.17g}\n", block, c.title, c.metrics.threshold);
  }
  return out;
}

}  // namespace adpred
