#include "adpred/commands.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "adpred/error.hpp"
#include "adpred/hashing.hpp"
#include "adpred/metrics.hpp"
#include "adpred/model_io.hpp"
#include "text_util.hpp"

namespace adpred {

namespace fs = std::filesystem;

std::string RunConfig::pipeline_path() const {
  return pipeline_file.empty() ? (fs::path(out_dir) / "pipeline.txt").string() : pipeline_file;
}

std::string RunConfig::model_path() const {
  return model_file.empty() ? (fs::path(out_dir) / "model_full.bin").string() : model_file;
}

std::string RunConfig::submission_path() const {
  return submission_file.empty() ? (fs::path(out_dir) / "submission.tsv").string()
                                  : submission_file;
}

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw Error(ErrorKind::usage, fmt::format("bad value '{}' for '{}'", value, key));
}

long long to_int(std::string_view key, std::string_view value) {
  auto v = detail::parse_int(value);
  if (!v) bad_value(key, value);
  return *v;
}

double to_real(std::string_view key, std::string_view value) {
  auto v = detail::parse_real(value);
  if (!v) bad_value(key, value);
  return *v;
}

bool to_bool(std::string_view key, std::string_view value) {
  auto v = detail::parse_bool(value);
  if (!v) bad_value(key, value);
  return *v;
}

std::vector<std::string> to_list(std::string_view value) {
  std::vector<std::string> out;
  value = detail::trim(value);
  if (value.empty() || value == "none") return out;
  std::vector<std::string_view> fields;
  detail::split_fields(value, ',', fields);
  for (auto f : fields) {
    f = detail::trim(f);
    if (!f.empty()) out.emplace_back(f);
  }
  return out;
}

template <typename Int>
std::vector<Int> to_int_list(std::string_view key, std::string_view value) {
  std::vector<Int> out;
  for (const auto& item : to_list(value)) out.push_back(static_cast<Int>(to_int(key, item)));
  return out;
}

std::string bool_text(bool b) { return b ? "true" : "false"; }
std::string real_text(double v) { return detail::format_real(v); }

char to_delimiter(std::string_view key, std::string_view value) {
  if (value == "tab") return '\t';
  if (value == "comma") return ',';
  if (value.size() == 1) return value[0];
  bad_value(key, value);
}

std::vector<ConfigKey> build_keys() {
  std::vector<ConfigKey> keys;
  auto add = [&](std::string name, std::string help, auto set, auto get) {
    keys.push_back({std::move(name), std::move(help), set, get});
  };
  auto path_key = [&](std::string name, std::string help, std::string RunConfig::*member) {
    add(name, help, [member](RunConfig& c, std::string_view v) { c.*member = std::string(v); },
        [member](const RunConfig& c) { return c.*member; });
  };
  path_key("train_file", "labeled training table", &RunConfig::train_file);
  path_key("test_file", "table to predict (labels optional)", &RunConfig::test_file);
  path_key("schema_file", "column schema", &RunConfig::schema_file);
  path_key("out_dir", "directory for artifacts", &RunConfig::out_dir);
  path_key("pipeline_file", "pipeline artifact (default <out_dir>/pipeline.txt)",
           &RunConfig::pipeline_file);
  path_key("model_file", "model artifact (default <out_dir>/model_full.bin)",
           &RunConfig::model_file);
  path_key("submission_file", "submission output (default <out_dir>/submission.tsv)",
           &RunConfig::submission_file);
  path_key("predictions_file", "evaluate: predictions in submission format",
           &RunConfig::predictions_file);
  path_key("labels_file", "evaluate: labeled table for the predictions", &RunConfig::labels_file);

  add("imputer", "mean | median | zero | iterative",
      [](RunConfig& c, std::string_view v) {
        auto s = parse_impute_strategy(v);
        if (!s) bad_value("imputer", v);
        c.prep.imputer.strategy = *s;
      },
      [](const RunConfig& c) { return std::string(to_string(c.prep.imputer.strategy)); });
  add("imputer_iterations", "maximum round-robin passes",
      [](RunConfig& c, std::string_view v) {
        c.prep.imputer.iteration_count = static_cast<int>(to_int("imputer_iterations", v));
      },
      [](const RunConfig& c) { return std::to_string(c.prep.imputer.iteration_count); });
  add("imputer_tolerance", "stop when no imputed cell moves by this much in a pass",
      [](RunConfig& c, std::string_view v) {
        c.prep.imputer.tolerance = to_real("imputer_tolerance", v);
      },
      [](const RunConfig& c) { return real_text(c.prep.imputer.tolerance); });
  add("drop_constant_columns", "drop feature columns with one distinct value",
      [](RunConfig& c, std::string_view v) {
        c.prep.drop_constant_columns = to_bool("drop_constant_columns", v);
      },
      [](const RunConfig& c) { return bool_text(c.prep.drop_constant_columns); });

  add("trunk", "hidden layer widths, comma separated ('none' for no hidden layer)",
      [](RunConfig& c, std::string_view v) { c.trunk = to_int_list<int>("trunk", v); },
      [](const RunConfig& c) {
        return c.trunk.empty() ? std::string("none") : fmt::format("{}", fmt::join(c.trunk, ","));
      });
  add("heads", "label heads, e.g. is_installed or is_clicked,is_installed",
      [](RunConfig& c, std::string_view v) { c.heads = to_list(v); },
      [](const RunConfig& c) { return fmt::format("{}", fmt::join(c.heads, ",")); });
  add("trunk_sharing", "shared | duplicated (two heads only)",
      [](RunConfig& c, std::string_view v) {
        auto s = parse_trunk_sharing(v);
        if (!s) bad_value("trunk_sharing", v);
        c.trunk_sharing = *s;
      },
      [](const RunConfig& c) { return std::string(to_string(c.trunk_sharing)); });
  add("freeze_missing_row", "never train embedding row 0",
      [](RunConfig& c, std::string_view v) {
        c.freeze_missing_row = to_bool("freeze_missing_row", v);
      },
      [](const RunConfig& c) { return bool_text(c.freeze_missing_row); });

  add("max_epochs", "epoch limit for early-stopped training",
      [](RunConfig& c, std::string_view v) {
        c.train.max_epochs = static_cast<int>(to_int("max_epochs", v));
      },
      [](const RunConfig& c) { return std::to_string(c.train.max_epochs); });
  add("patience", "epochs without improvement before stopping",
      [](RunConfig& c, std::string_view v) {
        c.train.patience = static_cast<int>(to_int("patience", v));
      },
      [](const RunConfig& c) { return std::to_string(c.train.patience); });
  add("val_fraction", "validation share of the labeled data",
      [](RunConfig& c, std::string_view v) { c.train.val_fraction = to_real("val_fraction", v); },
      [](const RunConfig& c) { return real_text(c.train.val_fraction); });
  add("monitor_head", "head whose validation loss drives stopping",
      [](RunConfig& c, std::string_view v) { c.train.monitor_head = std::string(v); },
      [](const RunConfig& c) { return c.train.monitor_head; });
  add("monitor_mode", "single | per_head (per_head needs duplicated trunks)",
      [](RunConfig& c, std::string_view v) {
        auto m = parse_monitor_mode(v);
        if (!m) bad_value("monitor_mode", v);
        c.train.monitor_mode = *m;
      },
      [](const RunConfig& c) { return std::string(to_string(c.train.monitor_mode)); });
  add("seed", "seed for initialization, splitting, shuffling and synth",
      [](RunConfig& c, std::string_view v) {
        const auto seed = static_cast<std::uint64_t>(to_int("seed", v));
        c.train.seed = seed;
        c.synth.seed = seed;
      },
      [](const RunConfig& c) { return std::to_string(c.train.seed); });
  add("optimizer", "sgd | adam",
      [](RunConfig& c, std::string_view v) {
        auto o = parse_optimizer(v);
        if (!o) bad_value("optimizer", v);
        c.train.optimizer.kind = *o;
      },
      [](const RunConfig& c) { return std::string(to_string(c.train.optimizer.kind)); });
  add("learning_rate", "optimizer step size",
      [](RunConfig& c, std::string_view v) {
        c.train.optimizer.learning_rate = to_real("learning_rate", v);
      },
      [](const RunConfig& c) { return real_text(c.train.optimizer.learning_rate); });
  add("batch_size", "rows per mini-batch",
      [](RunConfig& c, std::string_view v) {
        const auto b = to_int("batch_size", v);
        if (b < 1) bad_value("batch_size", v);
        c.train.batch_size = static_cast<std::size_t>(b);
      },
      [](const RunConfig& c) { return std::to_string(c.train.batch_size); });
  add("deterministic", "restrict to bit-reproducible execution",
      [](RunConfig& c, std::string_view v) { c.train.deterministic = to_bool("deterministic", v); },
      [](const RunConfig& c) { return bool_text(c.train.deterministic); });
  add("threshold", "probability at or above which a row is predicted positive",
      [](RunConfig& c, std::string_view v) {
        c.threshold = to_real("threshold", v);
        if (!(c.threshold > 0.0 && c.threshold < 1.0)) bad_value("threshold", v);
      },
      [](const RunConfig& c) { return real_text(c.threshold); });

  add("submission_columns", "probability columns written after row_id",
      [](RunConfig& c, std::string_view v) { c.submission_columns = to_list(v); },
      [](const RunConfig& c) { return fmt::format("{}", fmt::join(c.submission_columns, ",")); });
  add("submission_header", "write a header line",
      [](RunConfig& c, std::string_view v) { c.submission_header = to_bool("submission_header", v); },
      [](const RunConfig& c) { return bool_text(c.submission_header); });
  add("submission_delimiter", "tab | comma | single character",
      [](RunConfig& c, std::string_view v) {
        c.submission_delimiter = to_delimiter("submission_delimiter", v);
      },
      [](const RunConfig& c) {
        return c.submission_delimiter == '\t' ? std::string("tab")
               : c.submission_delimiter == ',' ? std::string("comma")
                                               : std::string(1, c.submission_delimiter);
      });

  add("synth_rows", "synth: labeled training rows",
      [](RunConfig& c, std::string_view v) {
        const auto n = to_int("synth_rows", v);
        if (n < 0) bad_value("synth_rows", v);
        c.synth.n_rows = static_cast<std::size_t>(n);
      },
      [](const RunConfig& c) { return std::to_string(c.synth.n_rows); });
  add("synth_test_rows", "synth: test rows",
      [](RunConfig& c, std::string_view v) {
        const auto n = to_int("synth_test_rows", v);
        if (n < 0) bad_value("synth_test_rows", v);
        c.synth.n_test = static_cast<std::size_t>(n);
      },
      [](const RunConfig& c) { return std::to_string(c.synth.n_test); });
  add("synth_install_rate", "synth: is_installed base rate",
      [](RunConfig& c, std::string_view v) { c.synth.install_rate = to_real("synth_install_rate", v); },
      [](const RunConfig& c) { return real_text(c.synth.install_rate); });
  add("synth_click_rate", "synth: is_clicked base rate",
      [](RunConfig& c, std::string_view v) { c.synth.click_rate = to_real("synth_click_rate", v); },
      [](const RunConfig& c) { return real_text(c.synth.click_rate); });
  add("synth_categorical_missing", "synth: missing share of categorical cells",
      [](RunConfig& c, std::string_view v) {
        c.synth.categorical_missing = to_real("synth_categorical_missing", v);
      },
      [](const RunConfig& c) { return real_text(c.synth.categorical_missing); });
  add("synth_numerical_missing", "synth: missing share of numerical cells",
      [](RunConfig& c, std::string_view v) {
        c.synth.numerical_missing = to_real("synth_numerical_missing", v);
      },
      [](const RunConfig& c) { return real_text(c.synth.numerical_missing); });
  add("synth_unseen_rate", "synth: share of test categorical cells with unseen tokens",
      [](RunConfig& c, std::string_view v) { c.synth.unseen_rate = to_real("synth_unseen_rate", v); },
      [](const RunConfig& c) { return real_text(c.synth.unseen_rate); });
  add("synth_cardinalities", "synth: distinct tokens per categorical column",
      [](RunConfig& c, std::string_view v) {
        c.synth.cardinalities = to_int_list<int>("synth_cardinalities", v);
      },
      [](const RunConfig& c) { return fmt::format("{}", fmt::join(c.synth.cardinalities, ",")); });
  add("synth_binary", "synth: binary column count",
      [](RunConfig& c, std::string_view v) {
        c.synth.n_binary = static_cast<int>(to_int("synth_binary", v));
      },
      [](const RunConfig& c) { return std::to_string(c.synth.n_binary); });
  add("synth_numerical", "synth: numerical column count",
      [](RunConfig& c, std::string_view v) {
        c.synth.n_numerical = static_cast<int>(to_int("synth_numerical", v));
      },
      [](const RunConfig& c) { return std::to_string(c.synth.n_numerical); });
  add("synth_signal", "synth: multiplier on the planted logit",
      [](RunConfig& c, std::string_view v) { c.synth.signal = to_real("synth_signal", v); },
      [](const RunConfig& c) { return real_text(c.synth.signal); });
  return keys;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = build_keys();
  return keys;
}

void set_config_value(RunConfig& config, std::string_view key, std::string_view value) {
  for (const auto& k : config_keys()) {
    if (k.name == key) {
      k.set(config, detail::trim(value));
      return;
    }
  }
  throw Error(ErrorKind::usage, fmt::format("unknown config key '{}'", key));
}

void apply_config_text(RunConfig& config, std::string_view text) {
  std::size_t line_no = 0;
  for (auto line : detail::split_lines(text)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::usage, fmt::format("config line {}: expected 'key = value'", line_no));
    }
    set_config_value(config, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
}

void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, fmt::format("cannot open config '{}'", path));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  apply_config_text(config, buffer.str());
}

std::string dump_config(const RunConfig& config) {
  std::string out;
  for (const auto& k : config_keys()) out += fmt::format("{} = {}\n", k.name, k.get(config));
  return out;
}

namespace {

void require(const std::string& value, const char* key) {
  if (value.empty()) throw Error(ErrorKind::usage, fmt::format("'{}' is required", key));
  if (!fs::exists(value)) {
    throw Error(ErrorKind::usage, fmt::format("{} '{}' does not exist", key, value));
  }
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, fmt::format("cannot write '{}'", path.string()));
  out << content;
  if (!out) throw Error(ErrorKind::io, fmt::format("failed writing '{}'", path.string()));
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io, fmt::format("cannot create '{}': {}", dir, ec.message()));
}

NetworkConfig network_for(const RunConfig& config, const PreparedDataset& data) {
  auto network = make_network_config(data, config.trunk, config.heads, config.trunk_sharing,
                                     config.train.seed);
  network.freeze_missing_row = config.freeze_missing_row;
  network.validate();
  return network;
}

TrainConfig train_config_for(const RunConfig& config) {
  TrainConfig train = config.train;
  // A one-head model trains whatever head it has.
  if (config.heads.size() == 1) train.monitor_head = config.heads.front();
  return train;
}

std::vector<double> column_of(const Eigen::MatrixXd& m, Eigen::Index c) {
  return {m.col(c).data(), m.col(c).data() + m.rows()};
}

MetricsReport head_report(const NetworkConfig& network, const NetworkParams& params,
                          const PreparedDataset& data, std::size_t head, double threshold) {
  const auto p = predict(network, params, data);
  const auto y = head_labels(network, data);
  const auto h = static_cast<Eigen::Index>(head);
  return report(column_of(y, h), column_of(p, h), threshold);
}

std::string percent(double fraction) { return fmt::format("{:.0f}%", 100.0 * fraction); }

}  // namespace

void cmd_prepare(const RunConfig& config, std::ostream& out) {
  require(config.schema_file, "schema_file");
  require(config.train_file, "train_file");
  const auto schema = load_schema(config.schema_file);
  const auto table = load_table(config.train_file, schema);
  const auto pipeline = fit_pipeline(table, config.prep);
  TransformStats stats;
  transform(pipeline, table, &stats);

  ensure_dir(config.out_dir);
  save_pipeline(pipeline, config.pipeline_path());

  out << fmt::format("rows: {}\n", table.n_rows());
  out << fmt::format("dropped constant columns: {}\n",
                     pipeline.dropped.empty() ? std::string("none")
                                              : fmt::format("{}", fmt::join(pipeline.dropped, " ")));
  for (const auto& v : pipeline.vocabularies) {
    out << fmt::format("categorical {}: {} distinct values, embedding width {}\n", v.column(),
                       v.size(), embedding_width_rule(v.size()));
  }
  for (const auto& b : pipeline.binaries) {
    out << fmt::format("binary {}: majority {}\n", b.column, static_cast<int>(b.majority));
  }
  for (const auto& s : pipeline.scalers) {
    out << fmt::format("numerical {}: range [{:.6g}, {:.6g}]\n", s.column, s.min_x, s.max_x);
  }
  out << fmt::format("imputer: {} ({} passes)\n", to_string(pipeline.imputer.strategy),
                     pipeline.imputer.passes_run);
  out << fmt::format("imputed numerical cells: {}\n", stats.imputed_numericals);
  out << fmt::format("imputed binary cells: {}\n", stats.imputed_binaries);
  out << fmt::format("missing categorical cells (code 0): {}\n", stats.missing_categoricals);
  if (table.load_stats().non_integer_categoricals || table.load_stats().unparsable_numericals) {
    out << fmt::format("warning: {} non-integer categorical and {} unparsable numerical cells "
                       "treated as missing\n",
                       table.load_stats().non_integer_categoricals,
                       table.load_stats().unparsable_numericals);
  }
  out << fmt::format("pipeline: {} (fingerprint {})\n", config.pipeline_path(),
                     to_hex(pipeline.fingerprint()));
}

void cmd_train(const RunConfig& config, std::ostream& out) {
  require(config.schema_file, "schema_file");
  require(config.train_file, "train_file");
  const auto pipeline = load_pipeline(config.pipeline_path());
  const auto schema = load_schema(config.schema_file);
  const auto data = transform(pipeline, load_table(config.train_file, schema));
  if (!data.has_labels()) throw Error(ErrorKind::usage, "training table has no labels");

  const auto network = network_for(config, data);
  const auto train = train_config_for(config);
  train.validate(network);

  const auto split = split_train_val(data, train.seed, train.val_fraction);
  const auto train_part = data.select(split.train);
  const auto val_part = data.select(split.val);
  out << fmt::format("split: {} train / {} validation rows\n", train_part.n_rows(), val_part.n_rows());

  const auto selected = train_with_early_stopping(train_part, val_part, network, train);
  const auto& history = selected.history;
  out << history.render_table();
  if (history.best_epoch == 0) {
    throw Error(ErrorKind::numeric, "training produced no usable epoch: " + history.diagnostic);
  }

  std::vector<int> head_epochs = history.head_best_epoch;
  for (std::size_t h = 0; h < head_epochs.size(); ++h) {
    if (network.is_frozen(h)) head_epochs[h] = 0;
  }
  const auto full = retrain_full(data, network, train, head_epochs);
  out << fmt::format("full retrain: {} epochs on {} rows\n", fmt::join(head_epochs, "/"),
                     data.n_rows());

  ensure_dir(config.out_dir);
  const fs::path dir(config.out_dir);
  const auto fingerprint = pipeline.fingerprint();
  save_model({network, selected.params, fingerprint}, (dir / "model_val.bin").string());
  save_model({network, full.params, fingerprint}, config.model_path());
  write_file(dir / "history.txt", history.render_table() + "\nfull retrain\n" + full.history.render_table());
  write_file(dir / "history.tsv", history.render_records());

  std::string tables, records;
  for (std::size_t h = 0; h < network.heads.size(); ++h) {
    if (network.is_frozen(h)) continue;
    std::vector<ReportColumn> columns{
        {"Training set (" + percent(1.0 - train.val_fraction) + ")",
         head_report(network, selected.params, train_part, h, config.threshold)},
        {"Validation set (" + percent(train.val_fraction) + ")",
         head_report(network, selected.params, val_part, h, config.threshold)},
        {"Training set (100%)", head_report(network, full.params, data, h, config.threshold)}};
    tables += render_table("Output '" + network.heads[h] + "'", columns) + "\n";
    records += render_records(network.heads[h], columns);
  }
  write_file(dir / "metrics.txt", tables);
  write_file(dir / "metrics.tsv", records);
  out << tables;
  out << fmt::format("models: {} (validation-selected), {} (full retrain)\n",
                     (dir / "model_val.bin").string(), config.model_path());
}

void cmd_predict(const RunConfig& config, std::ostream& out) {
  require(config.schema_file, "schema_file");
  require(config.test_file, "test_file");
  const auto pipeline = load_pipeline(config.pipeline_path());
  const auto model = load_model(config.model_path());
  if (model.pipeline_fingerprint != pipeline.fingerprint()) {
    throw Error(ErrorKind::mismatch,
                fmt::format("model was trained with pipeline {} but '{}' is {}",
                            to_hex(model.pipeline_fingerprint), config.pipeline_path(),
                            to_hex(pipeline.fingerprint())));
  }
  const auto schema = load_schema(config.schema_file);
  TransformStats stats;
  const auto data = transform(pipeline, load_table(config.test_file, schema), &stats);
  const auto probabilities = predict(model.config, model.params, data);

  std::ofstream file(config.submission_path(), std::ios::binary);
  if (!file) throw Error(ErrorKind::io, fmt::format("cannot write '{}'", config.submission_path()));
  const char d = config.submission_delimiter;
  std::vector<std::optional<std::size_t>> sources;
  for (const auto& column : config.submission_columns) {
    sources.push_back(model.config.head_index(column));
    if (sources.back() && model.config.is_frozen(*sources.back())) sources.back().reset();
  }
  std::string buffer;
  if (config.submission_header) {
    buffer += "row_id";
    for (const auto& column : config.submission_columns) buffer += d + column;
    buffer += '\n';
  }
  for (std::size_t r = 0; r < data.n_rows(); ++r) {
    buffer += data.row_ids[r];
    for (const auto& source : sources) {
      const double p = source ? probabilities(static_cast<Eigen::Index>(r),
                                              static_cast<Eigen::Index>(*source))
                              : 0.5;
      buffer += fmt::format("{}{:.15f}", d, p);
    }
    buffer += '\n';
  }
  file << buffer;
  if (!file) throw Error(ErrorKind::io, fmt::format("failed writing '{}'", config.submission_path()));

  out << fmt::format("rows: {}\n", data.n_rows());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (!sources[i]) {
      out << fmt::format("note: model has no trained head '{}'; column filled with 0.5\n",
                         config.submission_columns[i]);
    }
  }
  out << fmt::format("warnings: {} unseen categorical tokens encoded as 0, {} missing categorical "
                     "cells, {} numerical cells imputed, {} numerical cells clipped to the "
                     "training range\n",
                     stats.unseen_categoricals, stats.missing_categoricals,
                     stats.imputed_numericals, stats.clipped_numericals);
  out << fmt::format("submission: {}\n", config.submission_path());
}

namespace {

struct PredictionTable {
  std::vector<std::string> columns;
  std::vector<std::string> row_ids;
  std::vector<std::vector<double>> values;  // per column
};

PredictionTable read_predictions(const std::string& path, char delimiter) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, fmt::format("cannot open predictions '{}'", path));
  PredictionTable t;
  std::string line;
  std::vector<std::string_view> fields;
  if (!std::getline(in, line)) throw Error(ErrorKind::parse, "line 1: predictions file is empty");
  detail::split_fields(line, delimiter, fields);
  if (fields.size() < 2) throw Error(ErrorKind::parse, "line 1: expected row_id and probability columns");
  for (std::size_t i = 1; i < fields.size(); ++i) t.columns.emplace_back(detail::trim(fields[i]));
  t.values.resize(t.columns.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    detail::split_fields(line, delimiter, fields);
    if (fields.size() != t.columns.size() + 1) {
      throw Error(ErrorKind::parse, fmt::format("line {}: expected {} fields, found {}", line_no,
                                                t.columns.size() + 1, fields.size()));
    }
    t.row_ids.emplace_back(detail::trim(fields[0]));
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      auto v = detail::parse_real(fields[c + 1]);
      if (!v) {
        throw Error(ErrorKind::parse,
                    fmt::format("line {}: non-numeric prediction '{}'", line_no, fields[c + 1]));
      }
      t.values[c].push_back(*v);
    }
  }
  return t;
}

}  // namespace

void cmd_evaluate(const RunConfig& config, std::ostream& out) {
  require(config.schema_file, "schema_file");
  const auto schema = load_schema(config.schema_file);

  if (!config.predictions_file.empty()) {
    require(config.labels_file, "labels_file");
    const auto predictions = read_predictions(config.predictions_file, config.submission_delimiter);
    const auto labeled = load_table(config.labels_file, schema);
    if (!labeled.has_labels()) throw Error(ErrorKind::usage, "labels_file carries no labels");
    if (labeled.n_rows() != predictions.row_ids.size()) {
      throw Error(ErrorKind::mismatch, fmt::format("{} labeled rows but {} predictions",
                                                   labeled.n_rows(), predictions.row_ids.size()));
    }
    if (labeled.row_ids() != predictions.row_ids) {
      throw Error(ErrorKind::mismatch, "prediction row ids do not match the labeled rows");
    }
    std::string records;
    bool any = false;
    for (std::size_t c = 0; c < predictions.columns.size(); ++c) {
      const auto& name = predictions.columns[c];
      if (!labeled.has_column(name)) continue;
      const auto& cells = std::get<LabelCells>(labeled.cells(name));
      std::vector<double> y(cells.begin(), cells.end());
      std::vector<ReportColumn> columns{{"Evaluated set", report(y, predictions.values[c], config.threshold)}};
      out << render_table("Output '" + name + "'", columns) << "\n";
      records += render_records(name, columns);
      any = true;
    }
    if (!any) throw Error(ErrorKind::mismatch, "no prediction column matches a label column");
    ensure_dir(config.out_dir);
    write_file(fs::path(config.out_dir) / "evaluation.tsv", records);
    return;
  }

  require(config.train_file, "train_file");
  const auto pipeline = load_pipeline(config.pipeline_path());
  const auto model = load_model(config.model_path());
  if (model.pipeline_fingerprint != pipeline.fingerprint()) {
    throw Error(ErrorKind::mismatch, "model and pipeline fingerprints differ");
  }
  const auto data = transform(pipeline, load_table(config.train_file, schema));
  const auto split = split_train_val(data, config.train.seed, config.train.val_fraction);
  const auto train_part = data.select(split.train);
  const auto val_part = data.select(split.val);
  std::string records;
  for (std::size_t h = 0; h < model.config.heads.size(); ++h) {
    if (model.config.is_frozen(h)) continue;
    std::vector<ReportColumn> columns{
        {"Train. set (" + percent(1.0 - config.train.val_fraction) + ")",
         head_report(model.config, model.params, train_part, h, config.threshold)},
        {"Val. set (" + percent(config.train.val_fraction) + ")",
         head_report(model.config, model.params, val_part, h, config.threshold)}};
    out << render_table("Output '" + model.config.heads[h] + "'", columns) << "\n";
    records += render_records(model.config.heads[h], columns);
  }
  ensure_dir(config.out_dir);
  write_file(fs::path(config.out_dir) / "evaluation.tsv", records);
}

void cmd_synth(const RunConfig& config, std::ostream& out) {
  const auto data = synthesize(config.synth);
  ensure_dir(config.out_dir);
  const fs::path dir(config.out_dir);
  write_file(dir / "schema.txt", serialize_schema(data.schema));
  auto dump = [&](const char* name, const RawTable& table) {
    std::ostringstream s;
    write_table(s, table);
    write_file(dir / name, s.str());
  };
  dump("train.tsv", data.train);
  dump("test.tsv", data.test);
  dump("test_labeled.tsv", data.test_labeled);

  for (const char* label : {"is_clicked", "is_installed"}) {
    const auto& cells = std::get<LabelCells>(data.train.cells(label));
    double mean = 0.0;
    for (auto y : cells) mean += y;
    mean /= static_cast<double>(std::max<std::size_t>(cells.size(), 1));
    out << fmt::format("{} rate in train: {:.4f}\n", label, mean);
  }
  out << fmt::format("wrote {} train and {} test rows to {}\n", data.train.n_rows(),
                     data.test.n_rows(), dir.string());
}

}  // namespace adpred
