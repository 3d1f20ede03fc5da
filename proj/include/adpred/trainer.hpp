#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adpred/dataset.hpp"
#include "adpred/network.hpp"
#include "adpred/optimizer.hpp"

namespace adpred {

enum class MonitorMode {
  /// Stop the whole model on one head's validation loss.
  single,
  /// Each tower stops on its own head's validation loss; needs duplicated
  /// trunks so that the towers are independent.
  per_head,
};

std::string_view to_string(MonitorMode mode) noexcept;
std::optional<MonitorMode> parse_monitor_mode(std::string_view text) noexcept;

struct TrainConfig {
  double val_fraction = 0.25;
  int max_epochs = 50;
  int patience = 3;
  std::string monitor_head = "is_installed";
  MonitorMode monitor_mode = MonitorMode::single;
  std::uint64_t seed = 0;
  OptimizerSettings optimizer;
  std::size_t batch_size = 4096;
  bool deterministic = true;

  void validate(const NetworkConfig& network) const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  std::vector<double> train_loss;  // per head, full pass over the train split after the epoch
  std::vector<double> val_loss;    // per head; empty when there is no validation split
  double seconds = 0.0;
};

struct TrainingHistory {
  std::vector<std::string> heads;
  std::string monitor_head;
  std::vector<EpochRecord> epochs;
  /// 1-based epoch of the minimum monitored validation loss; 0 if none.
  int best_epoch = 0;
  /// Per-head best epoch (per_head mode), otherwise every entry equals best_epoch.
  std::vector<int> head_best_epoch;
  int stopped_epoch = 0;
  bool aborted = false;
  std::string diagnostic;

  double monitored_val_loss(int epoch) const;

  /// Aligned text table.
  std::string render_table() const;
  /// One line per epoch: epoch, train losses, val losses, best flag.
  std::string render_records() const;
};

/// Strict-improvement bookkeeping for one monitored loss sequence.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience) : patience_(patience) {}

  /// Records the next epoch's loss; true when it is a new minimum.
  bool observe(double loss);
  /// `patience` consecutive epochs have failed to improve.
  bool should_stop() const noexcept { return stale_ >= patience_; }
  int best_epoch() const noexcept { return best_epoch_; }
  int epochs_seen() const noexcept { return epochs_; }
  double best_loss() const noexcept { return best_loss_; }

 private:
  int patience_;
  int epochs_ = 0;
  int best_epoch_ = 0;
  int stale_ = 0;
  double best_loss_ = std::numeric_limits<double>::infinity();
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

/// Uniform seeded split with round(n * val_fraction) validation rows.
/// Throws Error(usage) on unlabeled data or fewer than 4 rows.
SplitIndices split_train_val(const PreparedDataset& data, std::uint64_t seed,
                             double val_fraction = 0.25);

struct TrainResult {
  NetworkParams params;
  TrainingHistory history;
};

/// Mini-batch training on `train` with validation-loss early stopping; the
/// returned parameters are the snapshot taken at the best epoch.
TrainResult train_with_early_stopping(const PreparedDataset& train, const PreparedDataset& val,
                                      const NetworkConfig& network, const TrainConfig& config);

/// Splits `data`, then trains as above.
TrainResult train_with_early_stopping(const PreparedDataset& data, const NetworkConfig& network,
                                      const TrainConfig& config);

/// Trains on all of `data` for exactly `epochs` epochs. The per-head form
/// stops head h's tower after head_epochs[h] epochs (duplicated trunks).
TrainResult retrain_full(const PreparedDataset& data, const NetworkConfig& network,
                         const TrainConfig& config, int epochs);
TrainResult retrain_full(const PreparedDataset& data, const NetworkConfig& network,
                         const TrainConfig& config, const std::vector<int>& head_epochs);

/// Pure forward pass; row order preserved. Throws Error(mismatch) when the
/// dataset does not fit the model.
Eigen::MatrixXd predict(const NetworkConfig& network, const NetworkParams& params,
                        const PreparedDataset& data);

/// Per-head loss of `params` over a whole dataset.
std::vector<double> evaluate_loss(const NetworkConfig& network, const NetworkParams& params,
                                  const PreparedDataset& data);

}  // namespace adpred
