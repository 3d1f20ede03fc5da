#include "adpred/optimizer.hpp"

#include <cmath>

#include <fmt/format.h>

#include "adpred/error.hpp"

namespace adpred {

std::string_view to_string(OptimizerKind kind) noexcept {
  return kind == OptimizerKind::sgd ? "sgd" : "adam";
}

std::optional<OptimizerKind> parse_optimizer(std::string_view text) noexcept {
  if (text == "sgd") return OptimizerKind::sgd;
  if (text == "adam") return OptimizerKind::adam;
  return std::nullopt;
}

OptimizerState make_optimizer(const OptimizerSettings& settings, const NetworkParams& params) {
  if (!(settings.learning_rate > 0.0)) throw Error(ErrorKind::usage, "learning rate must be > 0");
  OptimizerState state;
  state.settings = settings;
  if (settings.kind == OptimizerKind::adam) {
    state.first_moment = zeros_like(params);
    state.second_moment = zeros_like(params);
  }
  return state;
}

namespace {

std::vector<Eigen::MatrixXd*> blocks_of(NetworkParams& params) {
  std::vector<Eigen::MatrixXd*> out;
  for_each_block(params, [&](const std::string&, Eigen::MatrixXd& b) { out.push_back(&b); });
  return out;
}

std::vector<const Eigen::MatrixXd*> blocks_of(const NetworkParams& params) {
  std::vector<const Eigen::MatrixXd*> out;
  for_each_block(params, [&](const std::string&, const Eigen::MatrixXd& b) { out.push_back(&b); });
  return out;
}

}  // namespace

void optimizer_step(OptimizerState& state, NetworkParams& params, const Gradients& grads,
                    const std::vector<bool>* trainable) {
  auto p = blocks_of(params);
  auto g = blocks_of(grads);
  if (p.size() != g.size()) throw Error(ErrorKind::model, "gradient blocks do not match parameters");
  if (trainable && trainable->size() != p.size()) {
    throw Error(ErrorKind::model, "trainable mask does not match parameters");
  }
  std::vector<std::string> names;
  for_each_block(grads, [&](const std::string& name, const Eigen::MatrixXd&) { names.push_back(name); });
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i]->rows() != g[i]->rows() || p[i]->cols() != g[i]->cols()) {
      throw Error(ErrorKind::model, fmt::format("gradient shape mismatch in block {}", names[i]));
    }
    if (!g[i]->allFinite()) {
      throw Error(ErrorKind::numeric,
                  fmt::format("non-finite gradient in block {} at step {}", names[i], state.step + 1));
    }
  }

  const auto& s = state.settings;
  ++state.step;
  if (s.kind == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (trainable && !(*trainable)[i]) continue;
      *p[i] -= s.learning_rate * *g[i];
    }
    return;
  }

  auto m = blocks_of(state.first_moment);
  auto v = blocks_of(state.second_moment);
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(s.beta1, t);
  const double correction2 = 1.0 - std::pow(s.beta2, t);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (trainable && !(*trainable)[i]) continue;
    m[i]->array() = s.beta1 * m[i]->array() + (1.0 - s.beta1) * g[i]->array();
    v[i]->array() = s.beta2 * v[i]->array() + (1.0 - s.beta2) * g[i]->array().square();
    p[i]->array() -= s.learning_rate * (m[i]->array() / correction1) /
                     ((v[i]->array() / correction2).sqrt() + s.epsilon);
  }
}

}  // namespace adpred
