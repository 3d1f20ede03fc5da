#include "adpred/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "adpred/error.hpp"

namespace adpred {

void SynthSpec::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::usage, "synth: " + what); };
  if (n_rows < 100) fail("n_rows must be >= 100");
  if (!(install_rate > 0.0 && install_rate < 1.0) || !(click_rate > 0.0 && click_rate < 1.0)) {
    fail("label rates must lie in (0, 1)");
  }
  for (double rate : {categorical_missing, numerical_missing, unseen_rate}) {
    if (!(rate >= 0.0 && rate < 1.0)) fail("missing and unseen rates must lie in [0, 1)");
  }
  if (cardinalities.empty() && n_binary == 0 && n_numerical == 0) fail("no feature columns");
  for (int c : cardinalities) {
    if (c < 1) fail("cardinalities must be >= 1");
  }
  if (n_binary < 0 || n_numerical < 0 || latent_dims < 1) fail("bad column counts");
  if (!std::isfinite(signal) || signal < 0.0) fail("signal must be finite and >= 0");
}

namespace {

// Raw tokens are spread out so that re-coding is not the identity.
std::int64_t raw_token(std::size_t column, int id) {
  return 1000 * static_cast<std::int64_t>(column + 1) + 37 * static_cast<std::int64_t>(id) + 11;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Intercept b with mean(sigmoid(b + logits)) == rate.
double calibrate_bias(const std::vector<double>& logits, double rate) {
  double lo = -40.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    double mean = 0.0;
    for (double l : logits) mean += sigmoid(mid + l);
    mean /= static_cast<double>(logits.size());
    (mean < rate ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

constexpr std::array<double, 6> kScales{1.0, 0.1157, 4.15706830424e11, 250.0, 5.0, 1.0e3};

}  // namespace

SynthData synthesize(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const std::size_t n = spec.n_rows + spec.n_test;
  const auto n_cat = spec.cardinalities.size();
  const auto n_bin = static_cast<std::size_t>(spec.n_binary);
  const auto n_num = static_cast<std::size_t>(spec.n_numerical);
  const auto k = static_cast<std::size_t>(spec.latent_dims);

  // Planted structure.
  std::vector<std::vector<double>> install_effect(n_cat), click_effect(n_cat);
  for (std::size_t c = 0; c < n_cat; ++c) {
    const int card = spec.cardinalities[c];
    for (int id = 0; id < card; ++id) {
      install_effect[c].push_back(card > 1 ? 0.8 * normal(rng) : 0.0);
      click_effect[c].push_back(card > 1 ? 0.8 * normal(rng) : 0.0);
    }
  }
  std::vector<std::vector<double>> binary_loading(n_bin, std::vector<double>(k));
  std::vector<double> binary_install(n_bin), binary_click(n_bin);
  for (std::size_t b = 0; b < n_bin; ++b) {
    for (auto& u : binary_loading[b]) u = normal(rng);
    binary_install[b] = 0.5 * normal(rng);
    binary_click[b] = 0.5 * normal(rng);
  }
  std::vector<std::vector<double>> numerical_loading(n_num, std::vector<double>(k));
  std::vector<double> numerical_offset(n_num);
  for (std::size_t j = 0; j < n_num; ++j) {
    for (auto& a : numerical_loading[j]) a = normal(rng);
    numerical_offset[j] = 3.0 * kScales[j % kScales.size()];
  }
  std::vector<double> latent_install(k), latent_click(k);
  for (auto& v : latent_install) v = normal(rng);
  for (auto& v : latent_click) v = normal(rng);

  // Rows.
  std::vector<std::vector<int>> ids(n_cat, std::vector<int>(n));
  std::vector<std::vector<std::uint8_t>> bits(n_bin, std::vector<std::uint8_t>(n));
  std::vector<std::vector<double>> values(n_num, std::vector<double>(n));
  std::vector<double> install_logit(n), click_logit(n);
  std::vector<double> z(k);
  for (std::size_t r = 0; r < n; ++r) {
    for (auto& v : z) v = normal(rng);
    double install = 0.0, click = 0.0;
    for (std::size_t c = 0; c < n_cat; ++c) {
      std::uniform_int_distribution<int> pick(0, spec.cardinalities[c] - 1);
      const int id = pick(rng);
      ids[c][r] = id;
      install += install_effect[c][static_cast<std::size_t>(id)];
      click += click_effect[c][static_cast<std::size_t>(id)];
    }
    for (std::size_t b = 0; b < n_bin; ++b) {
      double s = normal(rng);
      for (std::size_t d = 0; d < k; ++d) s += binary_loading[b][d] * z[d];
      bits[b][r] = s > 0.0 ? 1 : 0;
      install += binary_install[b] * bits[b][r];
      click += binary_click[b] * bits[b][r];
    }
    for (std::size_t j = 0; j < n_num; ++j) {
      double s = 0.05 * normal(rng);
      for (std::size_t d = 0; d < k; ++d) s += numerical_loading[j][d] * z[d];
      values[j][r] = numerical_offset[j] + kScales[j % kScales.size()] * s;
    }
    for (std::size_t d = 0; d < k; ++d) {
      install += latent_install[d] * z[d];
      click += latent_click[d] * z[d];
    }
    if (k >= 2) install += 0.5 * z[0] * z[1];
    install_logit[r] = spec.signal * install;
    click_logit[r] = spec.signal * (0.5 * install + 0.8 * click);
  }
  const double install_bias = calibrate_bias(install_logit, spec.install_rate);
  const double click_bias = calibrate_bias(click_logit, spec.click_rate);

  // Columns.
  FeatureSchema schema;
  schema.delimiter = '\t';
  schema.has_header = true;
  std::size_t next = 0;
  auto name = [&] { return fmt::format("f_{}", next++); };
  schema.columns.push_back({name(), Role::row_id});
  schema.columns.push_back({name(), Role::ignored});
  for (std::size_t c = 0; c < n_cat; ++c) schema.columns.push_back({name(), Role::categorical});
  for (std::size_t b = 0; b < n_bin; ++b) schema.columns.push_back({name(), Role::binary});
  for (std::size_t j = 0; j < n_num; ++j) schema.columns.push_back({name(), Role::numerical});
  schema.columns.push_back({"is_clicked", Role::label});
  schema.columns.push_back({"is_installed", Role::label});
  schema.validate();

  std::vector<ColumnCells> cells;
  {
    TextCells row_ids(n), day(n);
    for (std::size_t r = 0; r < n; ++r) {
      row_ids[r] = std::to_string(r);
      day[r] = std::to_string(45 + r % 7);
    }
    cells.emplace_back(std::move(row_ids));
    cells.emplace_back(std::move(day));
  }
  for (std::size_t c = 0; c < n_cat; ++c) {
    CategoricalCells col(n);
    std::uniform_int_distribution<int> fresh(1, 100);
    for (std::size_t r = 0; r < n; ++r) {
      if (unit(rng) < spec.categorical_missing) continue;
      int id = ids[c][r];
      if (r >= spec.n_rows && spec.cardinalities[c] > 1 && unit(rng) < spec.unseen_rate) {
        id = spec.cardinalities[c] + fresh(rng);
      }
      col[r] = raw_token(c, id);
    }
    cells.emplace_back(std::move(col));
  }
  for (std::size_t b = 0; b < n_bin; ++b) {
    BinaryCells col(n);
    for (std::size_t r = 0; r < n; ++r) col[r] = bits[b][r];
    cells.emplace_back(std::move(col));
  }
  for (std::size_t j = 0; j < n_num; ++j) {
    NumericalCells col(n);
    for (std::size_t r = 0; r < n; ++r) {
      if (unit(rng) >= spec.numerical_missing) col[r] = values[j][r];
    }
    cells.emplace_back(std::move(col));
  }
  LabelCells clicked(n), installed(n);
  for (std::size_t r = 0; r < n; ++r) {
    clicked[r] = unit(rng) < sigmoid(click_bias + click_logit[r]) ? 1 : 0;
    installed[r] = unit(rng) < sigmoid(install_bias + install_logit[r]) ? 1 : 0;
  }
  cells.emplace_back(std::move(clicked));
  cells.emplace_back(std::move(installed));

  auto rows = [&](std::size_t begin, std::size_t end, bool labels) {
    FeatureSchema s = schema;
    std::vector<ColumnCells> out;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!labels && schema.columns[c].role == Role::label) continue;
      out.push_back(std::visit(
          [&](const auto& v) -> ColumnCells {
            using T = std::decay_t<decltype(v)>;
            return T(v.begin() + static_cast<std::ptrdiff_t>(begin),
                     v.begin() + static_cast<std::ptrdiff_t>(end));
          },
          cells[c]));
    }
    if (!labels) std::erase_if(s.columns, [](const ColumnSpec& c) { return c.role == Role::label; });
    return RawTable(std::move(s), end - begin, std::move(out));
  };

  SynthData data;
  data.schema = schema;
  data.train = rows(0, spec.n_rows, true);
  data.test = rows(spec.n_rows, n, false);
  data.test_labeled = rows(spec.n_rows, n, true);
  return data;
}

}  // namespace adpred
