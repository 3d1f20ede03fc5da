#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "adpred/error.hpp"
#include "adpred/imputer.hpp"
#include "adpred/pipeline.hpp"
#include "adpred/scaler.hpp"
#include "adpred/vocabulary.hpp"
#include "support.hpp"

using namespace adpred;

TEST(Vocabulary, AscendingCodes) {
  const auto v = fit_vocabulary("c", {12, 7, 7, 30});
  EXPECT_EQ(v.size(), 3);
  EXPECT_EQ(v.encode(7), 1);
  EXPECT_EQ(v.encode(12), 2);
  EXPECT_EQ(v.encode(30), 3);
  EXPECT_EQ(fit_vocabulary("c", {5}).size(), 1);
  const auto w = fit_vocabulary("c", {9, std::nullopt, 9});
  EXPECT_EQ(w.size(), 1);
  EXPECT_EQ(w.encode(9), 1);
  EXPECT_THROW(fit_vocabulary("c", {std::nullopt, std::nullopt}), Error);
}

TEST(Vocabulary, MissingAndUnseenEncodeToZero) {
  const auto v = fit_vocabulary("c", {7, 12});
  EXPECT_EQ(v.encode(12), 2);
  EXPECT_EQ(v.encode(std::nullopt), 0);
  EXPECT_EQ(v.encode(99), 0);
  EXPECT_FALSE(v.decode(0));
  EXPECT_FALSE(v.decode(3));
}

TEST(Vocabulary, RoundTripAndContiguity) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::int64_t> token(-1000000, 1000000);
  CategoricalCells cells;
  for (int i = 0; i < 5000; ++i) {
    if (i % 13 == 0) cells.push_back(std::nullopt);
    else cells.push_back(token(rng) % 700);
  }
  const auto v = fit_vocabulary("c", cells);
  std::vector<bool> used(static_cast<std::size_t>(v.size()) + 1, false);
  for (const auto& cell : cells) {
    if (!cell) continue;
    const auto code = v.encode(cell);
    ASSERT_GE(code, 1);
    ASSERT_LE(code, v.size());
    EXPECT_EQ(v.decode(code), cell);
    used[static_cast<std::size_t>(code)] = true;
  }
  EXPECT_FALSE(used[0]);
  EXPECT_TRUE(std::all_of(used.begin() + 1, used.end(), [](bool b) { return b; }));
}

TEST(Scaler, FitExamples) {
  const std::vector<double> a{2, 4, 6}, b{5, 5}, c{0, 0.1157};
  auto s = fit_minmax("a", a);
  EXPECT_EQ(s.min_x, 2);
  EXPECT_EQ(s.max_x, 6);
  s = fit_minmax("b", b);
  EXPECT_EQ(s.min_x, 5);
  EXPECT_EQ(s.max_x, 5);
  s = fit_minmax("c", c);
  EXPECT_EQ(s.min_x, 0);
  EXPECT_EQ(s.max_x, 0.1157);
  EXPECT_THROW(fit_minmax("e", std::vector<double>{}), Error);
  EXPECT_THROW(fit_minmax("n", std::vector<double>{1.0, NAN}), Error);
}

TEST(Scaler, ApplyExamplesWithClipAndDegenerateRange) {
  const ScalerParams p{"a", 2, 6};
  EXPECT_EQ(apply_minmax(p, 4), 0.5);
  EXPECT_EQ(apply_minmax(p, 8), 1.0);
  EXPECT_EQ(apply_minmax(p, -3), 0.0);
  EXPECT_EQ(apply_minmax({"b", 5, 5}, 5), 0.0);
  EXPECT_EQ(apply_minmax({"b", 5, 5}, 9), 0.0);
}

TEST(Scaler, EndpointsAndMonotonicity) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> real(-1e11, 4.157e11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> col(30);
    for (auto& x : col) x = real(rng) * std::pow(10.0, -(trial % 12));
    const auto p = fit_minmax("x", col);
    EXPECT_EQ(apply_minmax(p, *std::min_element(col.begin(), col.end())), 0.0);
    EXPECT_EQ(apply_minmax(p, *std::max_element(col.begin(), col.end())), 1.0);
    std::vector<double> probe(col);
    probe.push_back(p.min_x - 1.0);
    probe.push_back(p.max_x * 2.0);
    std::sort(probe.begin(), probe.end());
    for (std::size_t i = 1; i < probe.size(); ++i) {
      EXPECT_LE(apply_minmax(p, probe[i - 1]), apply_minmax(p, probe[i]));
    }
  }
}

namespace {

ImputerOptions options(ImputeStrategy s, int iterations = 10, double tolerance = 1e-3) {
  return {s, iterations, tolerance};
}

}  // namespace

TEST(Imputer, ConstantStrategiesMatchBruteForce) {
  const std::vector<NumericalCells> cols{{2.0, 4.0, std::nullopt, 8.0}};
  auto mean = fit_imputer({"b"}, cols, options(ImputeStrategy::mean));
  EXPECT_DOUBLE_EQ(mean.fallback[0], 14.0 / 3.0);
  EXPECT_DOUBLE_EQ(impute(mean, cols)[0][2], 14.0 / 3.0);
  const auto zero = fit_imputer({"b"}, cols, options(ImputeStrategy::zero));
  EXPECT_EQ(zero.fallback[0], 0.0);
  const auto median = fit_imputer({"b"}, cols, options(ImputeStrategy::median));
  EXPECT_EQ(median.fallback[0], 4.0);

  std::mt19937_64 rng(21);
  std::normal_distribution<double> normal(3.0, 10.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t rows = 1 + static_cast<std::size_t>(trial) * 3;
    std::vector<NumericalCells> data(3, NumericalCells(rows));
    for (auto& col : data) {
      for (auto& cell : col) {
        if (unit(rng) > 0.3) cell = normal(rng);
      }
      if (!col[0]) col[0] = normal(rng);
    }
    const auto m = fit_imputer({"a", "b", "c"}, data, options(ImputeStrategy::mean));
    const auto md = fit_imputer({"a", "b", "c"}, data, options(ImputeStrategy::median));
    for (std::size_t j = 0; j < 3; ++j) {
      std::vector<double> seen;
      for (const auto& cell : data[j]) {
        if (cell) seen.push_back(*cell);
      }
      double sum = 0.0;
      for (double x : seen) sum += x;
      EXPECT_EQ(m.fallback[j], sum / static_cast<double>(seen.size()));
      std::sort(seen.begin(), seen.end());
      const std::size_t k = seen.size();
      const double med = k % 2 ? seen[k / 2] : (seen[k / 2 - 1] + seen[k / 2]) / 2.0;
      EXPECT_EQ(md.fallback[j], med);
      const auto filled = impute(md, data);
      for (std::size_t r = 0; r < rows; ++r) {
        EXPECT_EQ(filled[j][r], data[j][r] ? *data[j][r] : med);
      }
    }
  }
}

TEST(Imputer, IterativeRecoversExactLinearPair) {
  const std::vector<NumericalCells> cols{{1.0, 2.0, 3.0, 4.0}, {2.0, 4.0, std::nullopt, 8.0}};
  const auto m = fit_imputer({"a", "b"}, cols, options(ImputeStrategy::iterative));
  ASSERT_EQ(m.models.size(), 2u);
  EXPECT_FALSE(m.models[1].mean_fallback);
  EXPECT_NEAR(m.models[1].intercept, 0.0, 1e-6);
  ASSERT_EQ(m.models[1].coefficients.size(), 1u);
  EXPECT_NEAR(m.models[1].coefficients[0], 2.0, 1e-6);

  const auto filled = impute(m, cols);
  EXPECT_NEAR(filled[1][2], 6.0, 1e-6);
  const std::vector<NumericalCells> row{{3.0}, {std::nullopt}};
  EXPECT_NEAR(impute(m, row)[1][0], 6.0, 1e-6);
  EXPECT_LE(m.passes_run, m.iteration_count);
}

TEST(Imputer, CompleteMatrixPassesThroughUnchanged) {
  const std::vector<NumericalCells> cols{{1.0, 5.0, -2.0}, {0.5, 0.25, 9.0}};
  for (auto s : {ImputeStrategy::mean, ImputeStrategy::median, ImputeStrategy::zero,
                 ImputeStrategy::iterative}) {
    const auto m = fit_imputer({"a", "b"}, cols, options(s));
    const auto out = impute(m, cols);
    for (std::size_t j = 0; j < 2; ++j) {
      for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(out[j][r], *cols[j][r]);
    }
  }
}

TEST(Imputer, FewObservedRowsFallBackToMean) {
  const std::vector<NumericalCells> cols{
      {1.0, 2.0, 3.0, 4.0}, {5.0, 1.0, 2.0, 7.0}, {std::nullopt, 3.0, std::nullopt, 5.0}};
  const auto m = fit_imputer({"a", "b", "c"}, cols, options(ImputeStrategy::iterative));
  EXPECT_TRUE(m.models[2].mean_fallback);
  const auto out = impute(m, cols);
  EXPECT_EQ(out[2][0], 4.0);
  EXPECT_EQ(out[2][2], 4.0);
}

TEST(Imputer, Errors) {
  const std::vector<NumericalCells> one{{1.0, std::nullopt}};
  EXPECT_THROW(fit_imputer({"a"}, one, options(ImputeStrategy::iterative)), Error);
  EXPECT_THROW(fit_imputer({"a"}, {{std::nullopt}}, options(ImputeStrategy::mean)), Error);
  const auto m = fit_imputer({"a"}, one, options(ImputeStrategy::mean));
  try {
    impute(m, {{1.0}, {2.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::mismatch);
  }
}

// Three columns driven by two latent factors: each column is an exact affine
// function of the other two. Every row misses at most one cell and each
// column's extremes stay observed.
TEST(Imputer, IterativeExactOnAffineDependentColumns) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t rows = 400;
    const double a[3][3] = {{1.5, 2.0, -1.0}, {-40.0, 0.5, 3.0}, {1e6, 2e5, -7e4}};
    std::vector<std::vector<double>> truth(3, std::vector<double>(rows));
    for (std::size_t r = 0; r < rows; ++r) {
      const double z1 = normal(rng), z2 = normal(rng);
      for (int j = 0; j < 3; ++j) truth[j][r] = a[j][0] + a[j][1] * z1 + a[j][2] * z2;
    }
    std::vector<NumericalCells> cols(3, NumericalCells(rows));
    for (int j = 0; j < 3; ++j) {
      for (std::size_t r = 0; r < rows; ++r) cols[j][r] = truth[j][r];
    }
    std::vector<bool> keep(rows, false);
    for (int j = 0; j < 3; ++j) {
      keep[std::min_element(truth[j].begin(), truth[j].end()) - truth[j].begin()] = true;
      keep[std::max_element(truth[j].begin(), truth[j].end()) - truth[j].begin()] = true;
    }
    std::size_t hidden = 0;
    for (std::size_t r = 0; r < rows; ++r) {
      if (keep[r] || unit(rng) > 0.3) continue;
      cols[static_cast<std::size_t>(unit(rng) * 3.0) % 3][r] = std::nullopt;
      ++hidden;
    }
    ASSERT_GT(hidden, 50u);

    const auto m = fit_imputer({"a", "b", "c"}, cols, options(ImputeStrategy::iterative, 200, 1e-10));
    EXPECT_LE(m.passes_run, 200);
    EXPECT_EQ(m.pass_max_change.size(), static_cast<std::size_t>(m.passes_run));
    const auto out = impute(m, cols);
    double worst = 0.0;
    for (int j = 0; j < 3; ++j) {
      const double scale = std::abs(a[j][1]) + std::abs(a[j][2]);
      for (std::size_t r = 0; r < rows; ++r) {
        if (cols[j][r]) {
          EXPECT_EQ(out[j][r], *cols[j][r]);
        } else {
          worst = std::max(worst, std::abs(out[j][r] - truth[j][r]) / scale);
        }
      }
    }
    EXPECT_LT(worst, 1e-6) << "seed " << seed;
  }
}

TEST(Imputer, IterativeTerminatesWithinIterationCount) {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<NumericalCells> cols(4, NumericalCells(300));
  for (std::size_t r = 0; r < 300; ++r) {
    const double z = normal(rng);
    for (std::size_t j = 0; j < 4; ++j) {
      if (unit(rng) > 0.25) cols[j][r] = z * static_cast<double>(j + 1) + normal(rng);
    }
  }
  for (int iterations : {1, 3, 10}) {
    const auto m = fit_imputer({"a", "b", "c", "d"}, cols, options(ImputeStrategy::iterative, iterations));
    EXPECT_GE(m.passes_run, 1);
    EXPECT_LE(m.passes_run, iterations);
    EXPECT_EQ(m.pass_max_change.size(), static_cast<std::size_t>(m.passes_run));
    const auto out = impute(m, cols);
    for (std::size_t j = 0; j < 4; ++j) {
      for (std::size_t r = 0; r < 300; ++r) {
        EXPECT_TRUE(std::isfinite(out[j][r]));
        if (cols[j][r]) EXPECT_EQ(out[j][r], *cols[j][r]);
        EXPECT_GE(out[j][r], m.observed_min[j]);
        EXPECT_LE(out[j][r], m.observed_max[j]);
      }
    }
  }
}

namespace {

FeatureSchema prep_schema() {
  return parse_schema(
      "has_header = false\n"
      "id = row_id\n"
      "skip = ignored\n"
      "k1 = categorical\n"
      "k7 = categorical\n"
      "b1 = binary\n"
      "x1 = numerical\n"
      "x2 = numerical\n"
      "y = label\n");
}

const char* kTrain =
    "r0\tq\t10\t5\t1\t0\t100\t1\n"
    "r1\tq\t20\t5\t0\t1\t\t0\n"
    "r2\tq\t\t5\t1\t2\t300\t1\n"
    "r3\tq\t10\t\t\t\t400\t0\n"
    "r4\tq\t30\t5\t1\t4\t500\t1\n";

}  // namespace

TEST(Pipeline, TransformOfTrainingTableIsComplete) {
  const auto train = test::table_from_text(kTrain, prep_schema());
  PrepConfig config;
  const auto p = fit_pipeline(train, config);
  EXPECT_EQ(p.dropped, std::vector<std::string>{"k7"});
  TransformStats stats;
  const auto d = transform(p, train, &stats);
  EXPECT_EQ(d.n_rows(), 5u);
  EXPECT_EQ(d.categorical_columns, std::vector<std::string>{"k1"});
  EXPECT_EQ(d.vocab_sizes, std::vector<std::int32_t>{3});
  EXPECT_EQ(d.categorical(2, 0), 0);
  EXPECT_EQ(d.categorical(1, 0), 2);
  EXPECT_EQ(d.binary(3, 0), 1.0);  // majority fill
  EXPECT_EQ(stats.imputed_binaries, 1u);
  EXPECT_EQ(stats.imputed_numericals, 2u);
  EXPECT_EQ(stats.missing_categoricals, 1u);
  for (Eigen::Index r = 0; r < d.numerical.rows(); ++r) {
    for (Eigen::Index c = 0; c < d.numerical.cols(); ++c) {
      EXPECT_GE(d.numerical(r, c), 0.0);
      EXPECT_LE(d.numerical(r, c), 1.0);
    }
  }
  EXPECT_EQ(d.numerical(0, 0), 0.0);
  EXPECT_EQ(d.numerical(4, 0), 1.0);
  EXPECT_EQ(d.numerical(0, 1), 0.0);
  EXPECT_EQ(d.numerical(4, 1), 1.0);
  // Noiseless x2 = 100 (x1 + 1): the iterative imputer recovers the gap.
  EXPECT_NEAR(d.numerical(1, 1), 0.25, 1e-6);
  EXPECT_EQ(d.labels.cols(), 1);
  EXPECT_EQ(d.row_ids[3], "r3");
}

TEST(Pipeline, UnseenAndOutOfRangeTestCells) {
  const auto p = fit_pipeline(test::table_from_text(kTrain, prep_schema()), {});
  TransformStats stats;
  const auto d = transform(p, test::table_from_text("t0\tq\t99\t5\t0\t9\t-50\n", prep_schema()), &stats);
  EXPECT_FALSE(d.has_labels());
  EXPECT_EQ(d.categorical(0, 0), 0);
  EXPECT_EQ(stats.unseen_categoricals, 1u);
  EXPECT_EQ(d.numerical(0, 0), 1.0);
  EXPECT_EQ(d.numerical(0, 1), 0.0);
  EXPECT_EQ(stats.clipped_numericals, 2u);
}

TEST(Pipeline, SchemaMismatchIsRefused) {
  const auto p = fit_pipeline(test::table_from_text(kTrain, prep_schema()), {});
  const auto other = parse_schema(
      "has_header = false\nid = row_id\nk1 = categorical\nb1 = binary\nx1 = numerical\ny = label\n");
  try {
    transform(p, test::table_from_text("r\t1\t0\t2\t1\n", other));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::mismatch);
  }
}

TEST(Pipeline, DeterministicAndRoundTrips) {
  const auto train = test::table_from_text(kTrain, prep_schema());
  for (auto s : {ImputeStrategy::mean, ImputeStrategy::median, ImputeStrategy::zero,
                 ImputeStrategy::iterative}) {
    PrepConfig config;
    config.imputer.strategy = s;
    const auto a = fit_pipeline(train, config);
    const auto b = fit_pipeline(train, config);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.serialize(), b.serialize());
    const auto c = PrepPipeline::deserialize(a.serialize());
    EXPECT_EQ(c, a);
    EXPECT_EQ(c.fingerprint(), a.fingerprint());
  }
  const auto dir = test::scratch_dir("pipeline");
  const auto p = fit_pipeline(train, {});
  save_pipeline(p, (dir / "p.txt").string());
  EXPECT_EQ(load_pipeline((dir / "p.txt").string()), p);
  EXPECT_THROW(PrepPipeline::deserialize("adpred-pipeline 99\n"), Error);
  EXPECT_THROW(PrepPipeline::deserialize("garbage"), Error);
}

TEST(Pipeline, SingleNumericalColumnUsesMeanForIterative) {
  const auto schema = parse_schema("has_header = false\nk = categorical\nx = numerical\ny = label\n");
  const auto p = fit_pipeline(test::table_from_text("1\t2\t0\n2\t\t1\n1\t6\t0\n", schema), {});
  EXPECT_EQ(p.imputer.strategy, ImputeStrategy::mean);
}
