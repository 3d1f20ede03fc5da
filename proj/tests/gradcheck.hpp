#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "adpred/network.hpp"

namespace adpred::test {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_block;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
  std::size_t absent_rows_skipped = 0;
  /// Skipped absent rows whose analytic gradient was not exactly zero.
  std::size_t absent_rows_nonzero = 0;
};

/// Sign pattern of every ReLU in a forward pass.
inline std::vector<bool> relu_pattern(const ForwardPass& pass) {
  std::vector<bool> bits;
  auto add = [&](const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) bits.push_back(m.data()[i] > 0.0);
  };
  for (const auto& t : pass.towers) {
    add(t.binary);
    add(t.numerical);
    for (const auto& l : t.trunk) add(l);
  }
  return bits;
}

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

/// Central differences of network_loss(...).total against backward(). A
/// coordinate whose +-h probe flips any ReLU is skipped: the loss is not
/// differentiable across the kink. Embedding rows for codes absent from the
/// batch are checked only for the first `absent_rows_checked` such rows per
/// table, since both sides are exactly zero there.
inline GradCheckResult gradient_check(const NetworkConfig& config, NetworkParams params,
                                      const PreparedDataset& batch, double h = 1e-4,
                                      std::size_t absent_rows_checked = 4) {
  const auto y = head_labels(config, batch);
  const auto base = forward(config, params, batch);
  const auto analytic = backward(config, params, batch, base, y);
  const auto pattern = relu_pattern(base);

  std::vector<std::set<Eigen::Index>> present(config.vocab_sizes.size());
  for (Eigen::Index r = 0; r < batch.categorical.rows(); ++r) {
    for (Eigen::Index c = 0; c < batch.categorical.cols(); ++c) {
      present[static_cast<std::size_t>(c)].insert(batch.categorical(r, c));
    }
  }

  std::vector<const Eigen::MatrixXd*> grad_blocks;
  for_each_block(analytic, [&](const std::string&, const Eigen::MatrixXd& g) { grad_blocks.push_back(&g); });

  GradCheckResult result;
  std::size_t block = 0;
  auto probe = [&](Eigen::MatrixXd& p, Eigen::Index i, const std::string& name, double a) {
    const double saved = p.data()[i];
    p.data()[i] = saved + h;
    const auto plus = forward(config, params, batch);
    p.data()[i] = saved - h;
    const auto minus = forward(config, params, batch);
    p.data()[i] = saved;
    if (relu_pattern(plus) != pattern || relu_pattern(minus) != pattern) {
      ++result.skipped_kinks;
      return;
    }
    const double lp = network_loss(config, plus.probabilities, y).total;
    const double lm = network_loss(config, minus.probabilities, y).total;
    const double err = relative_error(a, (lp - lm) / (2.0 * h));
    ++result.checked;
    if (err > result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_block = name;
    }
  };

  for_each_block(params, [&](const std::string& name, Eigen::MatrixXd& p) {
    const Eigen::MatrixXd& g = *grad_blocks[block++];
    const bool is_embedding = name.find("/embedding") != std::string::npos;
    const std::size_t column =
        is_embedding ? static_cast<std::size_t>(std::stoul(name.substr(name.find("/embedding") + 10))) : 0;
    std::size_t absent_seen = 0;
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      if (is_embedding && !present[column].count(r)) {
        if (absent_seen++ >= absent_rows_checked) {
          ++result.absent_rows_skipped;
          if (!(g.row(r).array() == 0.0).all()) ++result.absent_rows_nonzero;
          continue;
        }
      }
      for (Eigen::Index c = 0; c < p.cols(); ++c) {
        // Column-major storage: element (r, c) lives at r + c * rows.
        probe(p, r + c * p.rows(), name, g(r, c));
      }
    }
  });
  return result;
}

}  // namespace adpred::test
