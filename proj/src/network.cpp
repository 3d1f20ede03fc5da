#include "adpred/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "adpred/error.hpp"
#include "adpred/hashing.hpp"
#include "text_util.hpp"

namespace adpred {

int embedding_width_rule(std::int64_t distinct) {
  if (distinct < 1) throw Error(ErrorKind::model, "embedding needs at least one distinct value");
  return static_cast<int>(std::min<std::int64_t>(distinct, kMaxEmbeddingWidth));
}

std::string_view to_string(TrunkSharing sharing) noexcept {
  return sharing == TrunkSharing::shared ? "shared" : "duplicated";
}

std::optional<TrunkSharing> parse_trunk_sharing(std::string_view text) noexcept {
  if (text == "shared") return TrunkSharing::shared;
  if (text == "duplicated") return TrunkSharing::duplicated;
  return std::nullopt;
}

void NetworkConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::model, what); };
  if (vocab_sizes.size() != embedding_widths.size()) fail("one embedding width per categorical column");
  for (auto n : vocab_sizes) {
    if (n < 1) fail("vocabulary sizes must be >= 1");
  }
  for (auto m : embedding_widths) {
    if (m < 1) fail("embedding widths must be >= 1");
  }
  if (n_binary < 0 || n_numerical < 0) fail("negative input column count");
  if (vocab_sizes.empty() && n_binary == 0 && n_numerical == 0) fail("network has no inputs");
  if (binary_width < 1 || numerical_width < 1) fail("branch widths must be >= 1");
  for (int w : trunk) {
    if (w < 1) fail("trunk widths must be >= 1");
  }
  if (heads.empty() || heads.size() > 2) fail("a network has one or two heads");
  if (heads.size() == 2 && heads[0] == heads[1]) fail("head names must differ");
  if (sharing == TrunkSharing::duplicated && heads.size() != 2) {
    fail("duplicated trunks need two heads");
  }
  for (const auto& name : frozen_heads) {
    if (!head_index(name)) fail(fmt::format("frozen head '{}' is not a head", name));
  }
  if (frozen_heads.size() >= heads.size()) fail("at least one head must be trainable");
}

std::size_t NetworkConfig::tower_count() const noexcept {
  return sharing == TrunkSharing::duplicated ? heads.size() : 1;
}

std::size_t NetworkConfig::tower_of(std::size_t head) const noexcept {
  return sharing == TrunkSharing::duplicated ? head : 0;
}

std::optional<std::size_t> NetworkConfig::head_index(std::string_view name) const {
  for (std::size_t h = 0; h < heads.size(); ++h) {
    if (heads[h] == name) return h;
  }
  return std::nullopt;
}

bool NetworkConfig::is_frozen(std::size_t head) const {
  return std::find(frozen_heads.begin(), frozen_heads.end(), heads.at(head)) != frozen_heads.end();
}

std::vector<double> NetworkConfig::loss_weights() const {
  std::vector<double> weights(heads.size(), 0.0);
  std::size_t trainable = 0;
  for (std::size_t h = 0; h < heads.size(); ++h) trainable += is_frozen(h) ? 0 : 1;
  for (std::size_t h = 0; h < heads.size(); ++h) {
    if (!is_frozen(h)) weights[h] = 1.0 / static_cast<double>(trainable);
  }
  return weights;
}

std::string NetworkConfig::serialize() const {
  std::string out;
  out += fmt::format("vocab_sizes = {}\n", fmt::join(vocab_sizes, ","));
  out += fmt::format("embedding_widths = {}\n", fmt::join(embedding_widths, ","));
  out += fmt::format("n_binary = {}\n", n_binary);
  out += fmt::format("n_numerical = {}\n", n_numerical);
  out += fmt::format("binary_width = {}\n", binary_width);
  out += fmt::format("numerical_width = {}\n", numerical_width);
  out += fmt::format("trunk = {}\n", fmt::join(trunk, ","));
  out += fmt::format("heads = {}\n", fmt::join(heads, ","));
  out += fmt::format("sharing = {}\n", to_string(sharing));
  out += fmt::format("frozen_heads = {}\n", fmt::join(frozen_heads, ","));
  out += fmt::format("freeze_missing_row = {}\n", freeze_missing_row ? 1 : 0);
  out += fmt::format("seed = {}\n", seed);
  return out;
}

namespace {

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> items;
  if (detail::trim(text).empty()) return items;
  std::vector<std::string_view> fields;
  detail::split_fields(text, ',', fields);
  for (auto f : fields) items.emplace_back(detail::trim(f));
  return items;
}

template <typename Int>
std::vector<Int> int_list(std::string_view text) {
  std::vector<Int> out;
  for (const auto& item : split_list(text)) {
    auto v = detail::parse_int(item);
    if (!v) throw Error(ErrorKind::parse, fmt::format("bad integer '{}' in network config", item));
    out.push_back(static_cast<Int>(*v));
  }
  return out;
}

}  // namespace

NetworkConfig NetworkConfig::deserialize(std::string_view text) {
  NetworkConfig c;
  c.trunk.clear();
  c.heads.clear();
  for (auto line : detail::split_lines(text)) {
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorKind::parse, "bad network config line");
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    auto integer = [&] {
      auto v = detail::parse_int(value);
      if (!v) throw Error(ErrorKind::parse, fmt::format("bad value for '{}'", key));
      return *v;
    };
    if (key == "vocab_sizes") c.vocab_sizes = int_list<std::int32_t>(value);
    else if (key == "embedding_widths") c.embedding_widths = int_list<int>(value);
    else if (key == "n_binary") c.n_binary = static_cast<int>(integer());
    else if (key == "n_numerical") c.n_numerical = static_cast<int>(integer());
    else if (key == "binary_width") c.binary_width = static_cast<int>(integer());
    else if (key == "numerical_width") c.numerical_width = static_cast<int>(integer());
    else if (key == "trunk") c.trunk = int_list<int>(value);
    else if (key == "heads") c.heads = split_list(value);
    else if (key == "sharing") {
      auto s = parse_trunk_sharing(value);
      if (!s) throw Error(ErrorKind::parse, "bad trunk sharing");
      c.sharing = *s;
    } else if (key == "frozen_heads") c.frozen_heads = split_list(value);
    else if (key == "freeze_missing_row") c.freeze_missing_row = integer() != 0;
    else if (key == "seed") {
      std::uint64_t seed = 0;
      auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), seed);
      if (ec != std::errc()) throw Error(ErrorKind::parse, "bad seed");
      c.seed = seed;
    } else {
      throw Error(ErrorKind::parse, fmt::format("unknown network config key '{}'", key));
    }
  }
  c.validate();
  return c;
}

std::uint64_t NetworkConfig::fingerprint() const { return fnv1a(serialize()); }

NetworkConfig make_network_config(const PreparedDataset& data, std::vector<int> trunk,
                                  std::vector<std::string> heads, TrunkSharing sharing,
                                  std::uint64_t seed) {
  NetworkConfig c;
  c.vocab_sizes = data.vocab_sizes;
  for (auto n : data.vocab_sizes) c.embedding_widths.push_back(embedding_width_rule(n));
  c.n_binary = static_cast<int>(data.binary.cols());
  c.n_numerical = static_cast<int>(data.numerical.cols());
  c.trunk = std::move(trunk);
  c.heads = std::move(heads);
  c.sharing = sharing;
  c.seed = seed;
  c.validate();
  return c;
}

NetworkParams zeros_like(const NetworkParams& params) {
  NetworkParams out = params;
  for_each_block(out, [](const std::string&, Eigen::MatrixXd& block) { block.setZero(); });
  return out;
}

std::size_t parameter_count(const NetworkParams& params) {
  std::size_t n = 0;
  for_each_block(params, [&](const std::string&, const Eigen::MatrixXd& block) {
    n += static_cast<std::size_t>(block.size());
  });
  return n;
}

bool all_finite(const NetworkParams& params) {
  bool finite = true;
  for_each_block(params, [&](const std::string&, const Eigen::MatrixXd& block) {
    finite = finite && block.allFinite();
  });
  return finite;
}

namespace {

// Uniform in [-bound, bound] from a stream keyed by (seed, name).
void fill_uniform(Eigen::MatrixXd& block, std::uint64_t seed, std::string_view name, double bound) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(fnv1a(name)),
                    static_cast<std::uint32_t>(fnv1a(name) >> 32)};
  std::mt19937_64 rng(seq);
  for (Eigen::Index i = 0; i < block.rows(); ++i) {
    for (Eigen::Index j = 0; j < block.cols(); ++j) {
      const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      block(i, j) = (2.0 * unit - 1.0) * bound;
    }
  }
}

Dense make_dense(int in, int out, std::uint64_t seed, const std::string& name) {
  Dense d;
  if (in == 0) return d;
  d.weight.resize(in, out);
  fill_uniform(d.weight, seed, name + "/weight", std::sqrt(6.0 / (in + out)));
  d.bias = Eigen::MatrixXd::Zero(1, out);
  return d;
}

int concat_width(const NetworkConfig& c) {
  int width = std::accumulate(c.embedding_widths.begin(), c.embedding_widths.end(), 0);
  if (c.n_binary > 0) width += c.binary_width;
  if (c.n_numerical > 0) width += c.numerical_width;
  return width;
}

int tower_output_width(const NetworkConfig& c) {
  return c.trunk.empty() ? concat_width(c) : c.trunk.back();
}

Eigen::MatrixXd relu(Eigen::MatrixXd z) { return z.cwiseMax(0.0); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_batch(const NetworkConfig& config, const NetworkParams& params,
                 const PreparedDataset& batch) {
  if (params.towers.size() != config.tower_count() || params.heads.size() != config.heads.size()) {
    throw Error(ErrorKind::model, "parameters do not match the network config");
  }
  if (static_cast<std::size_t>(batch.categorical.cols()) != config.vocab_sizes.size() ||
      batch.binary.cols() != config.n_binary || batch.numerical.cols() != config.n_numerical) {
    throw Error(ErrorKind::model,
                fmt::format("batch has {}/{}/{} categorical/binary/numerical columns, model "
                            "expects {}/{}/{}",
                            batch.categorical.cols(), batch.binary.cols(), batch.numerical.cols(),
                            config.vocab_sizes.size(), config.n_binary, config.n_numerical));
  }
}

}  // namespace

NetworkParams init_network(const NetworkConfig& config) {
  config.validate();
  NetworkParams params;
  for (std::size_t t = 0; t < config.tower_count(); ++t) {
    const std::string prefix = "tower" + std::to_string(t) + "/";
    Tower tower;
    for (std::size_t c = 0; c < config.vocab_sizes.size(); ++c) {
      Eigen::MatrixXd table(config.vocab_sizes[c] + 1, config.embedding_widths[c]);
      fill_uniform(table, config.seed, prefix + "embedding" + std::to_string(c), 0.05);
      tower.embeddings.push_back(std::move(table));
    }
    tower.binary_branch = make_dense(config.n_binary, config.binary_width, config.seed, prefix + "binary");
    tower.numerical_branch =
        make_dense(config.n_numerical, config.numerical_width, config.seed, prefix + "numerical");
    int in = concat_width(config);
    for (std::size_t l = 0; l < config.trunk.size(); ++l) {
      tower.trunk.push_back(
          make_dense(in, config.trunk[l], config.seed, prefix + "trunk" + std::to_string(l)));
      in = config.trunk[l];
    }
    params.towers.push_back(std::move(tower));
  }
  const int head_in = tower_output_width(config);
  for (std::size_t h = 0; h < config.heads.size(); ++h) {
    // Keyed by head name so the stream does not depend on head position.
    Dense head = make_dense(head_in, 1, config.seed, "head/" + config.heads[h]);
    if (config.is_frozen(h)) head.weight.setZero();
    params.heads.push_back(std::move(head));
  }
  return params;
}

ForwardPass forward(const NetworkConfig& config, const NetworkParams& params,
                    const PreparedDataset& batch) {
  check_batch(config, params, batch);
  const Eigen::Index rows = batch.categorical.rows();
  const int width = concat_width(config);

  ForwardPass pass;
  pass.towers.resize(params.towers.size());
  for (std::size_t t = 0; t < params.towers.size(); ++t) {
    const Tower& tower = params.towers[t];
    TowerActivations& act = pass.towers[t];
    act.concat.resize(rows, width);
    Eigen::Index offset = 0;
    for (std::size_t c = 0; c < tower.embeddings.size(); ++c) {
      const auto& table = tower.embeddings[c];
      const auto m = table.cols();
      for (Eigen::Index r = 0; r < rows; ++r) {
        const auto code = batch.categorical(r, static_cast<Eigen::Index>(c));
        if (code < 0 || code >= table.rows()) {
          throw Error(ErrorKind::model,
                      fmt::format("categorical code {} out of range for column {} (table has {} rows)",
                                  code, c, table.rows()));
        }
        act.concat.block(r, offset, 1, m) = table.row(code);
      }
      offset += m;
    }
    if (config.n_binary > 0) {
      act.binary = relu((batch.binary * tower.binary_branch.weight).rowwise() +
                        tower.binary_branch.bias.row(0));
      act.concat.middleCols(offset, act.binary.cols()) = act.binary;
      offset += act.binary.cols();
    }
    if (config.n_numerical > 0) {
      act.numerical = relu((batch.numerical * tower.numerical_branch.weight).rowwise() +
                           tower.numerical_branch.bias.row(0));
      act.concat.middleCols(offset, act.numerical.cols()) = act.numerical;
      offset += act.numerical.cols();
    }
    const Eigen::MatrixXd* input = &act.concat;
    for (const Dense& layer : tower.trunk) {
      act.trunk.push_back(relu((*input * layer.weight).rowwise() + layer.bias.row(0)));
      input = &act.trunk.back();
    }
  }

  pass.logits.resize(rows, static_cast<Eigen::Index>(config.heads.size()));
  pass.probabilities.resize(rows, pass.logits.cols());
  for (std::size_t h = 0; h < config.heads.size(); ++h) {
    const auto& act = pass.towers[config.tower_of(h)];
    const Eigen::MatrixXd& top = act.trunk.empty() ? act.concat : act.trunk.back();
    const auto col = static_cast<Eigen::Index>(h);
    pass.logits.col(col) = (top * params.heads[h].weight).col(0).array() + params.heads[h].bias(0, 0);
    for (Eigen::Index r = 0; r < rows; ++r) {
      pass.probabilities(r, col) =
          std::clamp(sigmoid(pass.logits(r, col)), kProbabilityEps, 1.0 - kProbabilityEps);
    }
  }
  return pass;
}

Eigen::MatrixXd predict_probabilities(const NetworkConfig& config, const NetworkParams& params,
                                      const PreparedDataset& data, std::size_t chunk_rows) {
  const std::size_t n = data.n_rows();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(config.heads.size()));
  chunk_rows = std::max<std::size_t>(chunk_rows, 1);
  std::vector<std::size_t> index;
  for (std::size_t begin = 0; begin < n; begin += chunk_rows) {
    const std::size_t end = std::min(n, begin + chunk_rows);
    index.resize(end - begin);
    std::iota(index.begin(), index.end(), begin);
    const auto pass = forward(config, params, data.select(index));
    out.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin)) =
        pass.probabilities;
  }
  return out;
}

double bce_loss(std::span<const double> probabilities, std::span<const double> labels, double eps) {
  if (probabilities.size() != labels.size() || probabilities.empty()) {
    throw Error(ErrorKind::usage, "bce_loss needs equal, non-empty inputs");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = std::clamp(probabilities[i], eps, 1.0 - eps);
    sum += labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p);
  }
  return -sum / static_cast<double>(labels.size());
}

HeadLoss network_loss(const NetworkConfig& config, const Eigen::MatrixXd& probabilities,
                      const Eigen::MatrixXd& labels) {
  if (probabilities.rows() != labels.rows() || probabilities.cols() != labels.cols() ||
      probabilities.cols() != static_cast<Eigen::Index>(config.heads.size())) {
    throw Error(ErrorKind::model, "probabilities and labels differ in shape");
  }
  HeadLoss loss;
  const auto weights = config.loss_weights();
  for (Eigen::Index h = 0; h < probabilities.cols(); ++h) {
    const Eigen::VectorXd p = probabilities.col(h);
    const Eigen::VectorXd y = labels.col(h);
    const double l = bce_loss({p.data(), static_cast<std::size_t>(p.size())},
                              {y.data(), static_cast<std::size_t>(y.size())});
    loss.per_head.push_back(l);
    loss.total += weights[static_cast<std::size_t>(h)] * l;
  }
  return loss;
}

Eigen::MatrixXd head_labels(const NetworkConfig& config, const PreparedDataset& data) {
  Eigen::MatrixXd y(static_cast<Eigen::Index>(data.n_rows()),
                    static_cast<Eigen::Index>(config.heads.size()));
  for (std::size_t h = 0; h < config.heads.size(); ++h) {
    auto index = data.label_index(config.heads[h]);
    if (!index) {
      throw Error(ErrorKind::mismatch, fmt::format("dataset has no label '{}'", config.heads[h]));
    }
    y.col(static_cast<Eigen::Index>(h)) = data.labels.col(static_cast<Eigen::Index>(*index));
  }
  return y;
}

Gradients backward(const NetworkConfig& config, const NetworkParams& params,
                   const PreparedDataset& batch, const ForwardPass& pass,
                   const Eigen::MatrixXd& labels) {
  Gradients grads = zeros_like(params);
  const Eigen::Index rows = pass.probabilities.rows();
  const auto weights = config.loss_weights();
  const double inv_rows = 1.0 / static_cast<double>(rows);

  std::vector<Eigen::MatrixXd> d_top(params.towers.size());
  std::vector<bool> tower_used(params.towers.size(), false);
  for (std::size_t h = 0; h < config.heads.size(); ++h) {
    if (weights[h] == 0.0) continue;
    const std::size_t t = config.tower_of(h);
    const auto& act = pass.towers[t];
    const Eigen::MatrixXd& top = act.trunk.empty() ? act.concat : act.trunk.back();
    const auto col = static_cast<Eigen::Index>(h);
    const Eigen::VectorXd dz =
        (pass.probabilities.col(col) - labels.col(col)) * (weights[h] * inv_rows);
    grads.heads[h].weight = top.transpose() * dz;
    grads.heads[h].bias(0, 0) = dz.sum();
    if (!tower_used[t]) {
      d_top[t] = Eigen::MatrixXd::Zero(rows, top.cols());
      tower_used[t] = true;
    }
    d_top[t].noalias() += dz * params.heads[h].weight.transpose();
  }

  for (std::size_t t = 0; t < params.towers.size(); ++t) {
    if (!tower_used[t]) continue;
    const Tower& tower = params.towers[t];
    const auto& act = pass.towers[t];
    Tower& g = grads.towers[t];

    Eigen::MatrixXd d_act = std::move(d_top[t]);
    for (std::size_t l = tower.trunk.size(); l-- > 0;) {
      const Eigen::MatrixXd dz = d_act.cwiseProduct((act.trunk[l].array() > 0.0).cast<double>().matrix());
      const Eigen::MatrixXd& input = l == 0 ? act.concat : act.trunk[l - 1];
      g.trunk[l].weight.noalias() = input.transpose() * dz;
      g.trunk[l].bias = dz.colwise().sum();
      d_act = dz * tower.trunk[l].weight.transpose();
    }

    Eigen::Index offset = 0;
    for (std::size_t c = 0; c < tower.embeddings.size(); ++c) {
      const auto m = tower.embeddings[c].cols();
      auto& table_grad = g.embeddings[c];
      for (Eigen::Index r = 0; r < rows; ++r) {
        table_grad.row(batch.categorical(r, static_cast<Eigen::Index>(c))) +=
            d_act.block(r, offset, 1, m);
      }
      if (config.freeze_missing_row) table_grad.row(0).setZero();
      offset += m;
    }
    auto branch = [&](const Eigen::MatrixXd& out, const RowMatrix& input, Dense& layer_grad) {
      const Eigen::MatrixXd dz = d_act.middleCols(offset, out.cols())
                                     .cwiseProduct((out.array() > 0.0).cast<double>().matrix());
      layer_grad.weight.noalias() = input.transpose() * dz;
      layer_grad.bias = dz.colwise().sum();
      offset += out.cols();
    };
    if (config.n_binary > 0) branch(act.binary, batch.binary, g.binary_branch);
    if (config.n_numerical > 0) branch(act.numerical, batch.numerical, g.numerical_branch);
  }
  return grads;
}

LossAndGradients loss_and_gradients(const NetworkConfig& config, const NetworkParams& params,
                                    const PreparedDataset& batch) {
  const auto pass = forward(config, params, batch);
  const auto y = head_labels(config, batch);
  LossAndGradients out;
  out.loss = network_loss(config, pass.probabilities, y);
  out.gradients = backward(config, params, batch, pass, y);
  return out;
}

}  // namespace adpred
