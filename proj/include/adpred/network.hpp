#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "adpred/dataset.hpp"

namespace adpred {

inline constexpr int kMaxEmbeddingWidth = 256;
inline constexpr int kBranchWidth = 64;
inline constexpr double kProbabilityEps = 1e-15;

/// Embedding output width for a column with `distinct` training values
/// (code 0 excluded): the value count itself, capped at 256.
int embedding_width_rule(std::int64_t distinct);

enum class TrunkSharing { shared, duplicated };

std::string_view to_string(TrunkSharing sharing) noexcept;
std::optional<TrunkSharing> parse_trunk_sharing(std::string_view text) noexcept;

struct NetworkConfig {
  std::vector<std::int32_t> vocab_sizes;
  std::vector<int> embedding_widths;
  int n_binary = 0;
  int n_numerical = 0;
  int binary_width = kBranchWidth;
  int numerical_width = kBranchWidth;
  std::vector<int> trunk{256, 128};
  std::vector<std::string> heads{"is_installed"};
  TrunkSharing sharing = TrunkSharing::shared;
  /// Heads that start at zero and are never trained or counted in the loss.
  std::vector<std::string> frozen_heads;
  bool freeze_missing_row = true;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t tower_count() const noexcept;
  std::size_t tower_of(std::size_t head) const noexcept;
  std::optional<std::size_t> head_index(std::string_view name) const;
  bool is_frozen(std::size_t head) const;
  /// Loss weight of each head: equal over the non-frozen heads, 0 otherwise.
  std::vector<double> loss_weights() const;

  std::string serialize() const;
  static NetworkConfig deserialize(std::string_view text);
  std::uint64_t fingerprint() const;

  bool operator==(const NetworkConfig&) const = default;
};

/// Branch widths, trunk and heads for a prepared dataset; embedding widths
/// follow embedding_width_rule.
NetworkConfig make_network_config(const PreparedDataset& data, std::vector<int> trunk,
                                  std::vector<std::string> heads, TrunkSharing sharing,
                                  std::uint64_t seed);

/// Affine layer y = x W + b; weight is in x out, bias is 1 x out.
struct Dense {
  Eigen::MatrixXd weight;
  Eigen::MatrixXd bias;
};

/// Everything between the inputs and the head layer. A shared model has one
/// tower; a duplicated model has one per head.
struct Tower {
  std::vector<Eigen::MatrixXd> embeddings;  // (n + 1) x m, row 0 = missing/unseen
  Dense binary_branch;                      // absent when there are no binary columns
  Dense numerical_branch;                   // absent when there are no numerical columns
  std::vector<Dense> trunk;
};

struct NetworkParams {
  std::vector<Tower> towers;
  std::vector<Dense> heads;  // each out width 1
};

using Gradients = NetworkParams;

/// Visits every parameter block in the declared (serialization) order.
template <typename Params, typename Fn>
void for_each_block(Params& params, Fn&& fn) {
  for (std::size_t t = 0; t < params.towers.size(); ++t) {
    auto& tower = params.towers[t];
    const std::string prefix = "tower" + std::to_string(t) + "/";
    for (std::size_t c = 0; c < tower.embeddings.size(); ++c) {
      fn(prefix + "embedding" + std::to_string(c), tower.embeddings[c]);
    }
    fn(prefix + "binary/weight", tower.binary_branch.weight);
    fn(prefix + "binary/bias", tower.binary_branch.bias);
    fn(prefix + "numerical/weight", tower.numerical_branch.weight);
    fn(prefix + "numerical/bias", tower.numerical_branch.bias);
    for (std::size_t l = 0; l < tower.trunk.size(); ++l) {
      fn(prefix + "trunk" + std::to_string(l) + "/weight", tower.trunk[l].weight);
      fn(prefix + "trunk" + std::to_string(l) + "/bias", tower.trunk[l].bias);
    }
  }
  for (std::size_t h = 0; h < params.heads.size(); ++h) {
    fn("head" + std::to_string(h) + "/weight", params.heads[h].weight);
    fn("head" + std::to_string(h) + "/bias", params.heads[h].bias);
  }
}

NetworkParams zeros_like(const NetworkParams& params);
std::size_t parameter_count(const NetworkParams& params);
bool all_finite(const NetworkParams& params);

/// Fan-based uniform weights, zero biases, embeddings uniform in
/// [-0.05, 0.05]. Each block draws from its own stream derived from the seed
/// and the block name, so adding a head leaves the other blocks untouched.
NetworkParams init_network(const NetworkConfig& config);

struct TowerActivations {
  Eigen::MatrixXd binary;     // post-ReLU branch output
  Eigen::MatrixXd numerical;  // post-ReLU branch output
  Eigen::MatrixXd concat;
  std::vector<Eigen::MatrixXd> trunk;  // post-ReLU outputs
};

struct ForwardPass {
  std::vector<TowerActivations> towers;
  Eigen::MatrixXd logits;         // rows x heads
  Eigen::MatrixXd probabilities;  // rows x heads, clipped to [eps, 1 - eps]
};

/// Throws Error(model) on a block-count mismatch or an out-of-range code.
ForwardPass forward(const NetworkConfig& config, const NetworkParams& params,
                    const PreparedDataset& batch);

/// Probabilities only, evaluated in chunks to bound memory.
Eigen::MatrixXd predict_probabilities(const NetworkConfig& config, const NetworkParams& params,
                                      const PreparedDataset& data, std::size_t chunk_rows = 8192);

struct HeadLoss {
  std::vector<double> per_head;
  double total = 0.0;  // loss_weights-weighted sum
};

/// -mean(y ln p + (1 - y) ln(1 - p)) with p clipped to [eps, 1 - eps].
double bce_loss(std::span<const double> probabilities, std::span<const double> labels,
                double eps = kProbabilityEps);

/// Per-head loss against `labels` (rows x heads, matching config.heads).
HeadLoss network_loss(const NetworkConfig& config, const Eigen::MatrixXd& probabilities,
                      const Eigen::MatrixXd& labels);

/// Head labels of a dataset in config.heads order.
Eigen::MatrixXd head_labels(const NetworkConfig& config, const PreparedDataset& data);

/// Analytic gradient of network_loss(...).total. Frozen heads contribute
/// nothing; with freeze_missing_row embedding row 0 gets zero gradient.
Gradients backward(const NetworkConfig& config, const NetworkParams& params,
                   const PreparedDataset& batch, const ForwardPass& pass,
                   const Eigen::MatrixXd& labels);

/// Convenience wrapper: forward, loss and gradients for one batch.
struct LossAndGradients {
  HeadLoss loss;
  Gradients gradients;
};
LossAndGradients loss_and_gradients(const NetworkConfig& config, const NetworkParams& params,
                                    const PreparedDataset& batch);

}  // namespace adpred
