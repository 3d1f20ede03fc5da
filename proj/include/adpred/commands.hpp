#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "adpred/network.hpp"
#include "adpred/pipeline.hpp"
#include "adpred/synth.hpp"
#include "adpred/trainer.hpp"

namespace adpred {

/// Every option of every command. Defaults mirror the module defaults.
struct RunConfig {
  std::string train_file;
  std::string test_file;
  std::string schema_file;
  std::string out_dir = ".";
  std::string pipeline_file;     // default <out_dir>/pipeline.txt
  std::string model_file;        // default <out_dir>/model_full.bin
  std::string submission_file;   // default <out_dir>/submission.tsv
  std::string predictions_file;  // evaluate: submission-format predictions
  std::string labels_file;       // evaluate: labeled table matching the predictions

  PrepConfig prep;

  std::vector<int> trunk{256, 128};
  std::vector<std::string> heads{"is_installed"};
  TrunkSharing trunk_sharing = TrunkSharing::shared;
  bool freeze_missing_row = true;

  TrainConfig train;
  double threshold = 0.5;

  std::vector<std::string> submission_columns{"is_clicked", "is_installed"};
  bool submission_header = true;
  char submission_delimiter = '\t';

  SynthSpec synth;

  std::string pipeline_path() const;
  std::string model_path() const;
  std::string submission_path() const;
};

/// One documented configuration key.
struct ConfigKey {
  std::string name;
  std::string help;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<ConfigKey>& config_keys();

/// Applies one key; throws Error(usage) for unknown keys or bad values.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);

/// Flat `key = value` lines, `#` comments.
void apply_config_text(RunConfig& config, std::string_view text);
void apply_config_file(RunConfig& config, const std::string& path);

/// Every key with its current value, in config-file syntax.
std::string dump_config(const RunConfig& config);

// Commands write human-readable output to `out` and return normally on
// success; failures are thrown as adpred::Error.
void cmd_prepare(const RunConfig& config, std::ostream& out);
void cmd_train(const RunConfig& config, std::ostream& out);
void cmd_predict(const RunConfig& config, std::ostream& out);
void cmd_evaluate(const RunConfig& config, std::ostream& out);
void cmd_synth(const RunConfig& config, std::ostream& out);

}  // namespace adpred
