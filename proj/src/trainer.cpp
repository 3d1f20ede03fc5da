#include "adpred/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <future>
#include <numeric>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "adpred/error.hpp"

namespace adpred {

std::string_view to_string(MonitorMode mode) noexcept {
  return mode == MonitorMode::single ? "single" : "per_head";
}

std::optional<MonitorMode> parse_monitor_mode(std::string_view text) noexcept {
  if (text == "single") return MonitorMode::single;
  if (text == "per_head") return MonitorMode::per_head;
  return std::nullopt;
}

void TrainConfig::validate(const NetworkConfig& network) const {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw Error(ErrorKind::usage, "val_fraction must lie in (0, 1)");
  }
  if (max_epochs < 1) throw Error(ErrorKind::usage, "max_epochs must be >= 1");
  if (patience < 1) throw Error(ErrorKind::usage, "patience must be >= 1");
  if (batch_size < 1) throw Error(ErrorKind::usage, "batch_size must be >= 1");
  if (!network.head_index(monitor_head)) {
    throw Error(ErrorKind::usage, fmt::format("monitor head '{}' is not a model head", monitor_head));
  }
  if (network.is_frozen(*network.head_index(monitor_head))) {
    throw Error(ErrorKind::usage, "the monitored head is frozen");
  }
  if (monitor_mode == MonitorMode::per_head && network.sharing != TrunkSharing::duplicated) {
    throw Error(ErrorKind::usage, "per-head monitoring needs duplicated trunks");
  }
}

double TrainingHistory::monitored_val_loss(int epoch) const {
  const auto it = std::find(heads.begin(), heads.end(), monitor_head);
  if (it == heads.end() || epoch < 1 || epoch > static_cast<int>(epochs.size())) {
    throw Error(ErrorKind::usage, "no such epoch or head in history");
  }
  const auto& record = epochs[static_cast<std::size_t>(epoch - 1)];
  if (record.val_loss.empty()) throw Error(ErrorKind::usage, "history has no validation losses");
  return record.val_loss[static_cast<std::size_t>(it - heads.begin())];
}

std::string TrainingHistory::render_table() const {
  std::string out = fmt::format("{:>5}", "epoch");
  for (const auto& h : heads) out += fmt::format("  {:>22}", "train_loss[" + h + "]");
  for (const auto& h : heads) out += fmt::format("  {:>22}", "val_loss[" + h + "]");
  out += fmt::format("  {:>9}  best\n", "seconds");
  for (const auto& e : epochs) {
    out += fmt::format("{:>5}", e.epoch);
    for (double l : e.train_loss) out += fmt::format("  {:>22.6f}", l);
    for (std::size_t h = 0; h < heads.size(); ++h) {
      out += e.val_loss.empty() ? fmt::format("  {:>22}", "-") : fmt::format("  {:>22.6f}", e.val_loss[h]);
    }
    std::string flags;
    for (std::size_t h = 0; h < heads.size(); ++h) {
      if (h < head_best_epoch.size() && head_best_epoch[h] == e.epoch) {
        flags += flags.empty() ? heads[h] : "," + heads[h];
      }
    }
    out += fmt::format("  {:>9.3f}  {}\n", e.seconds, flags.empty() ? "" : "* " + flags);
  }
  out += fmt::format("best_epoch {}  stopped_epoch {}", best_epoch, stopped_epoch);
  if (aborted) out += "  ABORTED: " + diagnostic;
  out += "\n";
  return out;
}

std::string TrainingHistory::render_records() const {
  std::string out = "epoch";
  for (const auto& h : heads) out += "\ttrain_loss:" + h;
  for (const auto& h : heads) out += "\tval_loss:" + h;
  out += "\tbest\n";
  for (const auto& e : epochs) {
    out += std::to_string(e.epoch);
    for (double l : e.train_loss) out += fmt::format("\t{:.17g}", l);
    for (std::size_t h = 0; h < heads.size(); ++h) {
      out += e.val_loss.empty() ? std::string("\t") : fmt::format("\t{:.17g}", e.val_loss[h]);
    }
    out += e.epoch == best_epoch ? "\t1\n" : "\t0\n";
  }
  return out;
}

bool EarlyStopper::observe(double loss) {
  ++epochs_;
  if (loss < best_loss_) {
    best_loss_ = loss;
    best_epoch_ = epochs_;
    stale_ = 0;
    return true;
  }
  ++stale_;
  return false;
}

SplitIndices split_train_val(const PreparedDataset& data, std::uint64_t seed, double val_fraction) {
  if (!data.has_labels()) throw Error(ErrorKind::usage, "cannot split an unlabeled dataset");
  const std::size_t n = data.n_rows();
  if (n < 4) throw Error(ErrorKind::usage, "need at least 4 rows to split");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw Error(ErrorKind::usage, "val_fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * val_fraction));
  SplitIndices split;
  split.val.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

namespace {

constexpr std::size_t kEvalChunk = 8192;

Eigen::MatrixXd predict_impl(const NetworkConfig& network, const NetworkParams& params,
                             const PreparedDataset& data, bool parallel) {
  const std::size_t n = data.n_rows();
  const unsigned workers = parallel ? std::max(1u, std::thread::hardware_concurrency()) : 1u;
  if (workers == 1 || n <= kEvalChunk) return predict_probabilities(network, params, data, kEvalChunk);

  // Chunk boundaries match the sequential path, so values are identical.
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(network.heads.size()));
  std::vector<std::future<void>> jobs;
  const std::size_t n_chunks = (n + kEvalChunk - 1) / kEvalChunk;
  std::atomic<std::size_t> next{0};
  for (unsigned w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&] {
      std::vector<std::size_t> index;
      for (std::size_t chunk = next++; chunk < n_chunks; chunk = next++) {
        const std::size_t begin = chunk * kEvalChunk;
        const std::size_t end = std::min(n, begin + kEvalChunk);
        index.resize(end - begin);
        std::iota(index.begin(), index.end(), begin);
        const auto pass = forward(network, params, data.select(index));
        out.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin)) =
            pass.probabilities;
      }
    }));
  }
  for (auto& job : jobs) job.get();
  return out;
}

std::vector<double> loss_of(const NetworkConfig& network, const NetworkParams& params,
                            const PreparedDataset& data, bool parallel) {
  const auto probabilities = predict_impl(network, params, data, parallel);
  return network_loss(network, probabilities, head_labels(network, data)).per_head;
}

// Block ownership: the head index trained through each block, or -1 for a
// block shared by every head.
std::vector<int> block_owners(const NetworkConfig& network, const NetworkParams& params) {
  std::vector<int> owners;
  for_each_block(params, [&](const std::string& name, const Eigen::MatrixXd&) {
    int index = 0;
    if (name.rfind("tower", 0) == 0) {
      index = std::stoi(name.substr(5));
      owners.push_back(network.sharing == TrunkSharing::duplicated ? index : -1);
    } else {
      index = std::stoi(name.substr(4));
      owners.push_back(index);
    }
  });
  return owners;
}

std::vector<bool> trainable_mask(const NetworkConfig& network, const std::vector<int>& owners,
                                 const std::vector<bool>& active) {
  std::vector<bool> mask(owners.size());
  for (std::size_t b = 0; b < owners.size(); ++b) {
    const int owner = owners[b];
    if (owner < 0) {
      mask[b] = true;
    } else {
      const auto h = static_cast<std::size_t>(owner);
      mask[b] = active[h] && !network.is_frozen(h);
    }
  }
  return mask;
}

// Copies the blocks owned by head h from src to dst (tower h and head h).
void copy_head_blocks(const std::vector<int>& owners, std::size_t head, const NetworkParams& src,
                      NetworkParams& dst) {
  std::vector<const Eigen::MatrixXd*> from;
  for_each_block(src, [&](const std::string&, const Eigen::MatrixXd& b) { from.push_back(&b); });
  std::size_t i = 0;
  for_each_block(dst, [&](const std::string&, Eigen::MatrixXd& b) {
    if (owners[i] == static_cast<int>(head)) b = *from[i];
    ++i;
  });
}

struct StopRule {
  const PreparedDataset* val = nullptr;  // early stopping when set
  std::vector<int> head_epochs;           // fixed-length training otherwise
};

TrainResult run_training(const PreparedDataset& train, const NetworkConfig& network,
                         const TrainConfig& config, const StopRule& rule) {
  network.validate();
  config.validate(network);
  if (train.n_rows() == 0) throw Error(ErrorKind::usage, "empty training set");

  const std::size_t n_heads = network.heads.size();
  const std::size_t monitor = *network.head_index(config.monitor_head);
  const bool per_head = config.monitor_mode == MonitorMode::per_head;
  const bool parallel_eval = !config.deterministic;

  TrainResult result;
  result.params = init_network(network);
  TrainingHistory& history = result.history;
  history.heads = network.heads;
  history.monitor_head = config.monitor_head;
  history.head_best_epoch.assign(n_heads, 0);

  NetworkParams& params = result.params;
  OptimizerState optimizer = make_optimizer(config.optimizer, params);
  const auto owners = block_owners(network, params);

  std::vector<bool> active(n_heads, true);
  for (std::size_t h = 0; h < n_heads; ++h) active[h] = !network.is_frozen(h);

  std::vector<EarlyStopper> stoppers(n_heads, EarlyStopper(config.patience));
  NetworkParams best = params;

  std::vector<std::size_t> order(train.n_rows());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  int max_epochs = config.max_epochs;
  if (!rule.val) {
    max_epochs = *std::max_element(rule.head_epochs.begin(), rule.head_epochs.end());
  }

  for (int epoch = 1; epoch <= max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    const auto mask = trainable_mask(network, owners, active);
    try {
      for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
        const std::size_t end = std::min(order.size(), begin + config.batch_size);
        const auto batch = train.select(std::span(order).subspan(begin, end - begin));
        const auto step = loss_and_gradients(network, params, batch);
        if (!std::isfinite(step.loss.total)) {
          throw Error(ErrorKind::numeric,
                      fmt::format("non-finite batch loss in epoch {}", epoch));
        }
        optimizer_step(optimizer, params, step.gradients, &mask);
      }
      if (!all_finite(params)) {
        throw Error(ErrorKind::numeric, fmt::format("non-finite parameters after epoch {}", epoch));
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::numeric) throw;
      history.aborted = true;
      history.diagnostic = e.what();
      if (!rule.val || history.best_epoch == 0) {
        // Last finite state: the optimizer refuses non-finite updates, so
        // the current parameters are intact unless the epoch check fired.
        if (!all_finite(params)) params = best;
      }
      break;
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_of(network, params, train, parallel_eval);
    if (rule.val) record.val_loss = loss_of(network, params, *rule.val, parallel_eval);
    record.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    history.epochs.push_back(record);
    history.stopped_epoch = epoch;

    bool keep_going = false;
    if (rule.val) {
      if (per_head) {
        for (std::size_t h = 0; h < n_heads; ++h) {
          if (!active[h]) continue;
          if (stoppers[h].observe(record.val_loss[h])) {
            history.head_best_epoch[h] = epoch;
            copy_head_blocks(owners, h, params, best);
          } else if (stoppers[h].should_stop()) {
            active[h] = false;
          }
          keep_going = keep_going || active[h];
        }
        history.best_epoch = history.head_best_epoch[monitor];
      } else {
        if (stoppers[monitor].observe(record.val_loss[monitor])) {
          history.best_epoch = epoch;
          best = params;
        }
        keep_going = !stoppers[monitor].should_stop();
      }
    } else {
      for (std::size_t h = 0; h < n_heads; ++h) {
        if (active[h] && epoch >= rule.head_epochs[h]) active[h] = false;
        keep_going = keep_going || active[h];
      }
    }
    if (!keep_going) break;
  }

  if (rule.val) {
    if (!per_head) std::fill(history.head_best_epoch.begin(), history.head_best_epoch.end(),
                             history.best_epoch);
    if (history.best_epoch > 0) params = best;
  } else {
    history.best_epoch = history.stopped_epoch;
    for (std::size_t h = 0; h < n_heads; ++h) {
      history.head_best_epoch[h] = std::min(rule.head_epochs[h], history.stopped_epoch);
    }
  }
  return result;
}

}  // namespace

TrainResult train_with_early_stopping(const PreparedDataset& train, const PreparedDataset& val,
                                      const NetworkConfig& network, const TrainConfig& config) {
  if (val.n_rows() == 0) throw Error(ErrorKind::usage, "empty validation set");
  StopRule rule;
  rule.val = &val;
  return run_training(train, network, config, rule);
}

TrainResult train_with_early_stopping(const PreparedDataset& data, const NetworkConfig& network,
                                      const TrainConfig& config) {
  const auto split = split_train_val(data, config.seed, config.val_fraction);
  return train_with_early_stopping(data.select(split.train), data.select(split.val), network, config);
}

TrainResult retrain_full(const PreparedDataset& data, const NetworkConfig& network,
                         const TrainConfig& config, int epochs) {
  return retrain_full(data, network, config, std::vector<int>(network.heads.size(), epochs));
}

TrainResult retrain_full(const PreparedDataset& data, const NetworkConfig& network,
                         const TrainConfig& config, const std::vector<int>& head_epochs) {
  if (head_epochs.size() != network.heads.size()) {
    throw Error(ErrorKind::usage, "one epoch count per head");
  }
  for (std::size_t h = 0; h < head_epochs.size(); ++h) {
    if (head_epochs[h] < 1 && !network.is_frozen(h)) {
      throw Error(ErrorKind::usage, "retraining needs an epoch count >= 1");
    }
  }
  const bool uneven = std::adjacent_find(head_epochs.begin(), head_epochs.end(),
                                         std::not_equal_to<>()) != head_epochs.end();
  if (uneven && network.sharing != TrunkSharing::duplicated) {
    throw Error(ErrorKind::usage, "per-head epoch counts need duplicated trunks");
  }
  StopRule rule;
  rule.head_epochs = head_epochs;
  for (std::size_t h = 0; h < head_epochs.size(); ++h) {
    if (network.is_frozen(h)) rule.head_epochs[h] = 0;
  }
  TrainConfig fixed = config;
  fixed.max_epochs = std::max(1, *std::max_element(rule.head_epochs.begin(), rule.head_epochs.end()));
  return run_training(data, network, fixed, rule);
}

Eigen::MatrixXd predict(const NetworkConfig& network, const NetworkParams& params,
                        const PreparedDataset& data) {
  if (static_cast<std::size_t>(data.categorical.cols()) != network.vocab_sizes.size() ||
      data.binary.cols() != network.n_binary || data.numerical.cols() != network.n_numerical) {
    throw Error(ErrorKind::mismatch, "dataset columns do not match the model inputs");
  }
  for (std::size_t c = 0; c < data.vocab_sizes.size(); ++c) {
    if (data.vocab_sizes[c] != network.vocab_sizes[c]) {
      throw Error(ErrorKind::mismatch,
                  fmt::format("vocabulary size of categorical column {} differs from the model", c));
    }
  }
  return predict_impl(network, params, data, false);
}

std::vector<double> evaluate_loss(const NetworkConfig& network, const NetworkParams& params,
                                  const PreparedDataset& data) {
  return loss_of(network, params, data, false);
}

}  // namespace adpred
