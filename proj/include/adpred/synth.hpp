#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "adpred/schema.hpp"
#include "adpred/table.hpp"

namespace adpred {

/// Generator settings for a challenge-shaped labeled table: f_0 row id,
/// f_1 ignored, then categorical, binary and numerical blocks, then the
/// is_clicked and is_installed labels.
struct SynthSpec {
  std::size_t n_rows = 50000;
  std::size_t n_test = 5000;
  std::uint64_t seed = 0;
  double install_rate = 0.17;
  double click_rate = 0.22;
  double categorical_missing = 0.05;
  double numerical_missing = 0.10;
  /// Share of test categorical cells replaced by tokens never used in training.
  double unseen_rate = 0.01;
  /// Distinct tokens per categorical column; 1 makes the column constant.
  std::vector<int> cardinalities{6, 12, 40, 300, 4, 1, 2000, 9};
  int n_binary = 4;
  int n_numerical = 6;
  int latent_dims = 2;
  /// Multiplier on the planted logit.
  double signal = 1.5;

  void validate() const;
};

struct SynthData {
  FeatureSchema schema;
  RawTable train;
  RawTable test;          // without label columns
  RawTable test_labeled;  // same rows as test, with labels
};

SynthData synthesize(const SynthSpec& spec);

}  // namespace adpred
