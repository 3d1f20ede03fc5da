#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "adpred/network.hpp"

namespace adpred {

enum class OptimizerKind { sgd, adam };

std::string_view to_string(OptimizerKind kind) noexcept;
std::optional<OptimizerKind> parse_optimizer(std::string_view text) noexcept;

struct OptimizerSettings {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimizerState {
  OptimizerSettings settings;
  NetworkParams first_moment;
  NetworkParams second_moment;
  std::uint64_t step = 0;
};

OptimizerState make_optimizer(const OptimizerSettings& settings, const NetworkParams& params);

/// sgd: p -= lr g. adam: bias-corrected moment update,
/// p -= lr m_hat / (sqrt(v_hat) + eps).
/// `trainable`, when given, holds one flag per block in for_each_block order;
/// blocks flagged false are left untouched, moments included.
/// Throws Error(numeric) before touching anything if a gradient is not finite.
void optimizer_step(OptimizerState& state, NetworkParams& params, const Gradients& grads,
                    const std::vector<bool>* trainable = nullptr);

}  // namespace adpred
