#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "adpred/dataset.hpp"
#include "adpred/imputer.hpp"
#include "adpred/scaler.hpp"
#include "adpred/schema.hpp"
#include "adpred/table.hpp"
#include "adpred/vocabulary.hpp"

namespace adpred {

struct PrepConfig {
  ImputerOptions imputer;
  bool drop_constant_columns = true;
};

struct BinaryFill {
  std::string column;
  std::uint8_t majority = 0;

  bool operator==(const BinaryFill&) const = default;
};

/// Preprocessing state fitted on a training table. Immutable once built.
struct PrepPipeline {
  static constexpr int format_version = 1;

  FeatureSchema schema;
  std::vector<std::string> dropped;
  std::vector<Vocabulary> vocabularies;
  std::vector<BinaryFill> binaries;
  ImputerModel imputer;
  std::vector<ScalerParams> scalers;
  std::vector<std::string> labels;

  /// Versioned text artifact; reals are written as hex floats so that a
  /// round trip is exact.
  std::string serialize() const;
  static PrepPipeline deserialize(const std::string& text);
  std::uint64_t fingerprint() const;

  bool operator==(const PrepPipeline&) const = default;
};

struct TransformStats {
  std::size_t missing_categoricals = 0;
  std::size_t unseen_categoricals = 0;
  std::size_t imputed_numericals = 0;
  std::size_t imputed_binaries = 0;
  std::size_t clipped_numericals = 0;
};

PrepPipeline fit_pipeline(const RawTable& train, const PrepConfig& config);

/// Throws Error(mismatch) when the table lacks a column the pipeline needs
/// or a column's role differs. Labels are copied when present.
PreparedDataset transform(const PrepPipeline& pipeline, const RawTable& table,
                          TransformStats* stats = nullptr);

void save_pipeline(const PrepPipeline& pipeline, const std::string& path);
PrepPipeline load_pipeline(const std::string& path);

}  // namespace adpred
