#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "adpred/dataset.hpp"
#include "adpred/pipeline.hpp"
#include "adpred/synth.hpp"
#include "adpred/schema.hpp"
#include "adpred/table.hpp"

namespace adpred::test {

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("adpred_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline RawTable table_from_text(const std::string& text, const FeatureSchema& schema) {
  std::istringstream in(text);
  return read_table(in, schema);
}

/// Random already-prepared data: codes uniform in [0, n], binaries fair
/// coins, numericals uniform in [0, 1], labels fair coins.
inline PreparedDataset random_dataset(std::mt19937_64& rng, const std::vector<std::int32_t>& vocab,
                                      int n_binary, int n_numerical, std::size_t rows,
                                      const std::vector<std::string>& labels) {
  PreparedDataset d;
  d.vocab_sizes = vocab;
  for (std::size_t c = 0; c < vocab.size(); ++c) d.categorical_columns.push_back("c" + std::to_string(c));
  for (int b = 0; b < n_binary; ++b) d.binary_columns.push_back("b" + std::to_string(b));
  for (int x = 0; x < n_numerical; ++x) d.numerical_columns.push_back("x" + std::to_string(x));
  d.label_columns = labels;
  const auto n = static_cast<Eigen::Index>(rows);
  d.categorical.resize(n, static_cast<Eigen::Index>(vocab.size()));
  d.binary.resize(n, n_binary);
  d.numerical.resize(n, n_numerical);
  d.labels.resize(n, static_cast<Eigen::Index>(labels.size()));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < vocab.size(); ++c) {
      std::uniform_int_distribution<std::int32_t> code(0, vocab[c]);
      d.categorical(r, static_cast<Eigen::Index>(c)) = code(rng);
    }
    for (int b = 0; b < n_binary; ++b) d.binary(r, b) = unit(rng) < 0.5 ? 0.0 : 1.0;
    for (int x = 0; x < n_numerical; ++x) d.numerical(r, x) = unit(rng);
    for (Eigen::Index l = 0; l < d.labels.cols(); ++l) d.labels(r, l) = unit(rng) < 0.5 ? 0.0 : 1.0;
    d.row_ids.push_back(std::to_string(r));
  }
  return d;
}

/// A small synthetic labeled dataset, preprocessed with default settings.
inline PreparedDataset prepared_synth(std::size_t rows, std::uint64_t seed) {
  SynthSpec spec;
  spec.n_rows = rows;
  spec.n_test = 100;
  spec.seed = seed;
  spec.cardinalities = {5, 30, 1, 200};
  const auto data = synthesize(spec);
  return transform(fit_pipeline(data.train, {}), data.train);
}

}  // namespace adpred::test
