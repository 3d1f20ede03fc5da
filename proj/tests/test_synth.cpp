#include <gtest/gtest.h>

#include <sstream>

#include "adpred/error.hpp"
#include "adpred/synth.hpp"
#include "adpred/table.hpp"

using namespace adpred;

namespace {

double label_mean(const RawTable& t, const std::string& name) {
  const auto& cells = std::get<LabelCells>(t.cells(name));
  double sum = 0.0;
  for (auto y : cells) sum += y;
  return sum / static_cast<double>(cells.size());
}

std::string text_of(const RawTable& t) {
  std::ostringstream out;
  write_table(out, t);
  return out.str();
}

std::size_t missing_cells(const RawTable& t) {
  std::size_t n = 0;
  for (std::size_t c = 0; c < t.n_columns(); ++c) {
    std::visit(
        [&](const auto& cells) {
          for (const auto& cell : cells) {
            if constexpr (requires { cell.has_value(); }) n += !cell.has_value();
          }
        },
        t.cells(c));
  }
  return n;
}

}  // namespace

TEST(Synth, BaseRatesWithinOnePoint) {
  SynthSpec spec;
  spec.n_rows = 50000;
  spec.n_test = 100;
  const auto d = synthesize(spec);
  EXPECT_EQ(d.train.n_rows(), 50000u);
  EXPECT_NEAR(label_mean(d.train, "is_installed"), 0.17, 0.01);
  EXPECT_NEAR(label_mean(d.train, "is_clicked"), 0.22, 0.01);
}

TEST(Synth, ChallengeShapedLayout) {
  SynthSpec spec;
  spec.n_rows = 2000;
  const auto d = synthesize(spec);
  const auto& s = d.schema;
  EXPECT_EQ(s.columns.front().name, "f_0");
  EXPECT_EQ(s.columns.front().role, Role::row_id);
  EXPECT_EQ(s.columns[1].role, Role::ignored);
  EXPECT_EQ(s.count(Role::categorical), spec.cardinalities.size());
  EXPECT_EQ(s.count(Role::binary), 4u);
  EXPECT_EQ(s.count(Role::numerical), 6u);
  EXPECT_EQ(s.names_with_role(Role::label), (std::vector<std::string>{"is_clicked", "is_installed"}));
  EXPECT_EQ(detect_constant_features(d.train), std::vector<std::string>{"f_7"});
  EXPECT_FALSE(d.test.has_labels());
  EXPECT_TRUE(d.test_labeled.has_labels());
  EXPECT_EQ(d.test.row_ids(), d.test_labeled.row_ids());
  EXPECT_EQ(d.test.n_rows(), spec.n_test);
  EXPECT_GT(missing_cells(d.train), 0u);
}

TEST(Synth, ZeroMissingRateGivesCompleteTables) {
  SynthSpec spec;
  spec.n_rows = 1000;
  spec.categorical_missing = 0.0;
  spec.numerical_missing = 0.0;
  const auto d = synthesize(spec);
  EXPECT_EQ(missing_cells(d.train), 0u);
  EXPECT_EQ(missing_cells(d.test), 0u);
}

TEST(Synth, SameSeedSameBytes) {
  SynthSpec spec;
  spec.n_rows = 3000;
  spec.seed = 12;
  const auto a = synthesize(spec);
  const auto b = synthesize(spec);
  EXPECT_EQ(text_of(a.train), text_of(b.train));
  EXPECT_EQ(text_of(a.test), text_of(b.test));
  spec.seed = 13;
  EXPECT_NE(text_of(synthesize(spec).train), text_of(a.train));
}

TEST(Synth, InvalidSpecsAreUsageErrors) {
  auto expect_usage = [](SynthSpec spec) {
    try {
      synthesize(spec);
      ADD_FAILURE();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::usage);
    }
  };
  SynthSpec spec;
  spec.n_rows = 99;
  expect_usage(spec);
  spec = {};
  spec.install_rate = 1.0;
  expect_usage(spec);
  spec = {};
  spec.numerical_missing = -0.1;
  expect_usage(spec);
  spec = {};
  spec.cardinalities = {0};
  expect_usage(spec);
}
