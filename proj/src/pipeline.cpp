#include "adpred/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "adpred/error.hpp"
#include "adpred/hashing.hpp"

namespace adpred {

namespace {

constexpr const char* kMagic = "adpred-pipeline";

std::string hexf(double value) { return fmt::format("{:a}", value); }

class TokenReader {
 public:
  explicit TokenReader(const std::string& text) : in_(text) {}

  std::string word() {
    std::string w;
    if (!(in_ >> w)) throw Error(ErrorKind::parse, "pipeline artifact ended early");
    return w;
  }
  void expect(const std::string& keyword) {
    auto w = word();
    if (w != keyword) {
      throw Error(ErrorKind::parse,
                  fmt::format("pipeline artifact: expected '{}', found '{}'", keyword, w));
    }
  }
  double real() {
    auto w = word();
    char* end = nullptr;
    const double v = std::strtod(w.c_str(), &end);
    if (end != w.c_str() + w.size()) {
      throw Error(ErrorKind::parse, fmt::format("pipeline artifact: bad real '{}'", w));
    }
    return v;
  }
  long long integer() {
    auto w = word();
    char* end = nullptr;
    const long long v = std::strtoll(w.c_str(), &end, 10);
    if (end != w.c_str() + w.size()) {
      throw Error(ErrorKind::parse, fmt::format("pipeline artifact: bad integer '{}'", w));
    }
    return v;
  }
  std::size_t count() {
    auto v = integer();
    if (v < 0) throw Error(ErrorKind::parse, "pipeline artifact: negative count");
    return static_cast<std::size_t>(v);
  }
  // Remainder of the current line, used for embedded schema lines.
  std::string line() {
    std::string l;
    std::getline(in_ >> std::ws, l);
    return l;
  }

 private:
  std::istringstream in_;
};


}  // namespace

std::string PrepPipeline::serialize() const {
  std::string out = fmt::format("{} {}\n", kMagic, format_version);
  const auto schema_text = serialize_schema(schema);
  const auto schema_lines = std::count(schema_text.begin(), schema_text.end(), '\n');
  out += fmt::format("schema {}\n{}", schema_lines, schema_text);
  out += fmt::format("dropped {}", dropped.size());
  for (const auto& name : dropped) out += " " + name;
  out += fmt::format("\nlabels {}", labels.size());
  for (const auto& name : labels) out += " " + name;
  out += '\n';
  for (const auto& vocab : vocabularies) {
    out += fmt::format("categorical {} {}\n", vocab.column(), vocab.size());
    out += fmt::format("tokens {}\n", fmt::join(vocab.tokens(), " "));
  }
  for (const auto& fill : binaries) {
    out += fmt::format("binary {} {}\n", fill.column, static_cast<int>(fill.majority));
  }
  out += fmt::format("imputer {} {} {} {} {}\n", to_string(imputer.strategy),
                     imputer.iteration_count, hexf(imputer.tolerance), imputer.passes_run,
                     imputer.columns.size());
  for (std::size_t j = 0; j < imputer.columns.size(); ++j) {
    out += fmt::format("column {} {} {} {} {}\n", imputer.columns[j], hexf(imputer.fallback[j]),
                       hexf(imputer.means[j]), hexf(imputer.observed_min[j]),
                       hexf(imputer.observed_max[j]));
  }
  for (std::size_t j = 0; j < imputer.models.size(); ++j) {
    const auto& m = imputer.models[j];
    out += fmt::format("model {} {} {} {}", imputer.columns[j], m.mean_fallback ? 1 : 0,
                       hexf(m.intercept), m.coefficients.size());
    for (double c : m.coefficients) out += " " + hexf(c);
    out += '\n';
  }
  out += fmt::format("pass_changes {}", imputer.pass_max_change.size());
  for (double c : imputer.pass_max_change) out += " " + hexf(c);
  out += '\n';
  for (const auto& s : scalers) {
    out += fmt::format("scaler {} {} {}\n", s.column, hexf(s.min_x), hexf(s.max_x));
  }
  out += "end\n";
  return out;
}

PrepPipeline PrepPipeline::deserialize(const std::string& text) {
  TokenReader in(text);
  in.expect(kMagic);
  if (in.integer() != format_version) {
    throw Error(ErrorKind::parse, "unsupported pipeline artifact version");
  }
  PrepPipeline p;
  in.expect("schema");
  const auto schema_lines = in.count();
  std::string schema_text;
  for (std::size_t i = 0; i < schema_lines; ++i) schema_text += in.line() + "\n";
  p.schema = parse_schema(schema_text);

  in.expect("dropped");
  for (auto n = in.count(); n > 0; --n) p.dropped.push_back(in.word());
  in.expect("labels");
  for (auto n = in.count(); n > 0; --n) p.labels.push_back(in.word());

  std::size_t imputer_columns = 0;
  while (true) {
    const auto keyword = in.word();
    if (keyword == "categorical") {
      auto name = in.word();
      const auto n = in.count();
      in.expect("tokens");
      std::vector<std::int64_t> tokens(n);
      for (auto& t : tokens) t = in.integer();
      p.vocabularies.emplace_back(std::move(name), std::move(tokens));
    } else if (keyword == "binary") {
      auto name = in.word();
      p.binaries.push_back({std::move(name), static_cast<std::uint8_t>(in.integer() != 0)});
    } else if (keyword == "imputer") {
      auto strategy = parse_impute_strategy(in.word());
      if (!strategy) throw Error(ErrorKind::parse, "pipeline artifact: unknown imputer strategy");
      p.imputer.strategy = *strategy;
      p.imputer.iteration_count = static_cast<int>(in.integer());
      p.imputer.tolerance = in.real();
      p.imputer.passes_run = static_cast<int>(in.integer());
      imputer_columns = in.count();
    } else if (keyword == "column") {
      p.imputer.columns.push_back(in.word());
      p.imputer.fallback.push_back(in.real());
      p.imputer.means.push_back(in.real());
      p.imputer.observed_min.push_back(in.real());
      p.imputer.observed_max.push_back(in.real());
    } else if (keyword == "model") {
      in.word();
      LinearModel m;
      m.mean_fallback = in.integer() != 0;
      m.intercept = in.real();
      m.coefficients.resize(in.count());
      for (auto& c : m.coefficients) c = in.real();
      p.imputer.models.push_back(std::move(m));
    } else if (keyword == "pass_changes") {
      p.imputer.pass_max_change.resize(in.count());
      for (auto& c : p.imputer.pass_max_change) c = in.real();
    } else if (keyword == "scaler") {
      ScalerParams s;
      s.column = in.word();
      s.min_x = in.real();
      s.max_x = in.real();
      p.scalers.push_back(std::move(s));
    } else if (keyword == "end") {
      break;
    } else {
      throw Error(ErrorKind::parse, fmt::format("pipeline artifact: unknown section '{}'", keyword));
    }
  }
  if (p.imputer.columns.size() != imputer_columns || p.scalers.size() != imputer_columns) {
    throw Error(ErrorKind::parse, "pipeline artifact: numerical sections are inconsistent");
  }
  return p;
}

std::uint64_t PrepPipeline::fingerprint() const { return fnv1a(serialize()); }

PrepPipeline fit_pipeline(const RawTable& train, const PrepConfig& config) {
  const auto& schema = train.schema();
  schema.validate();
  if (train.n_rows() == 0) throw Error(ErrorKind::prep, "training table is empty");

  PrepPipeline p;
  p.schema = schema;
  p.labels = schema.names_with_role(Role::label);
  if (config.drop_constant_columns) p.dropped = detect_constant_features(train);
  const RawTable kept = drop_columns(train, p.dropped);

  std::vector<std::string> numerical_names;
  std::vector<NumericalCells> numerical_cells;
  for (std::size_t c = 0; c < kept.n_columns(); ++c) {
    const auto& spec = kept.spec(c);
    switch (spec.role) {
      case Role::categorical:
        p.vocabularies.push_back(
            fit_vocabulary(spec.name, std::get<CategoricalCells>(kept.cells(c))));
        break;
      case Role::binary: {
        std::size_t ones = 0, zeros = 0;
        for (const auto& cell : std::get<BinaryCells>(kept.cells(c))) {
          if (cell) (*cell ? ones : zeros) += 1;
        }
        p.binaries.push_back({spec.name, static_cast<std::uint8_t>(ones > zeros ? 1 : 0)});
        break;
      }
      case Role::numerical:
        numerical_names.push_back(spec.name);
        numerical_cells.push_back(std::get<NumericalCells>(kept.cells(c)));
        break;
      default: break;
    }
  }

  ImputerOptions options = config.imputer;
  if (options.strategy == ImputeStrategy::iterative && numerical_names.size() < 2) {
    options.strategy = ImputeStrategy::mean;
  }
  p.imputer = fit_imputer(numerical_names, numerical_cells, options);
  const auto completed = impute(p.imputer, numerical_cells);
  for (std::size_t j = 0; j < numerical_names.size(); ++j) {
    p.scalers.push_back(fit_minmax(numerical_names[j], completed[j]));
  }
  return p;
}

PreparedDataset transform(const PrepPipeline& pipeline, const RawTable& table,
                          TransformStats* stats) {
  TransformStats local;
  TransformStats& st = stats ? *stats : local;
  st = {};

  auto column = [&](const std::string& name, Role role) -> const ColumnCells& {
    auto index = table.schema().index_of(name);
    if (!index) throw Error(ErrorKind::mismatch, fmt::format("table lacks column '{}'", name));
    if (table.spec(*index).role != role) {
      throw Error(ErrorKind::mismatch, fmt::format("column '{}' has role '{}', pipeline expects '{}'",
                                                   name, to_string(table.spec(*index).role),
                                                   to_string(role)));
    }
    return table.cells(*index);
  };

  const auto n = static_cast<Eigen::Index>(table.n_rows());
  PreparedDataset out;
  out.row_ids = table.row_ids();

  out.categorical.resize(n, static_cast<Eigen::Index>(pipeline.vocabularies.size()));
  for (std::size_t c = 0; c < pipeline.vocabularies.size(); ++c) {
    const auto& vocab = pipeline.vocabularies[c];
    const auto& cells = std::get<CategoricalCells>(column(vocab.column(), Role::categorical));
    out.categorical_columns.push_back(vocab.column());
    out.vocab_sizes.push_back(vocab.size());
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto& cell = cells[static_cast<std::size_t>(r)];
      const auto code = vocab.encode(cell);
      if (!cell) {
        ++st.missing_categoricals;
      } else if (code == 0) {
        ++st.unseen_categoricals;
      }
      out.categorical(r, static_cast<Eigen::Index>(c)) = code;
    }
  }

  out.binary.resize(n, static_cast<Eigen::Index>(pipeline.binaries.size()));
  for (std::size_t c = 0; c < pipeline.binaries.size(); ++c) {
    const auto& fill = pipeline.binaries[c];
    const auto& cells = std::get<BinaryCells>(column(fill.column, Role::binary));
    out.binary_columns.push_back(fill.column);
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto& cell = cells[static_cast<std::size_t>(r)];
      if (!cell) ++st.imputed_binaries;
      out.binary(r, static_cast<Eigen::Index>(c)) = cell ? *cell : fill.majority;
    }
  }

  std::vector<NumericalCells> numerical_cells;
  for (const auto& name : pipeline.imputer.columns) {
    numerical_cells.push_back(std::get<NumericalCells>(column(name, Role::numerical)));
    for (const auto& cell : numerical_cells.back()) {
      if (!cell) ++st.imputed_numericals;
    }
  }
  const auto completed = impute(pipeline.imputer, numerical_cells);
  out.numerical.resize(n, static_cast<Eigen::Index>(pipeline.scalers.size()));
  for (std::size_t j = 0; j < pipeline.scalers.size(); ++j) {
    const auto& scaler = pipeline.scalers[j];
    out.numerical_columns.push_back(scaler.column);
    for (Eigen::Index r = 0; r < n; ++r) {
      const double x = completed[j][static_cast<std::size_t>(r)];
      if (x < scaler.min_x || x > scaler.max_x) ++st.clipped_numericals;
      out.numerical(r, static_cast<Eigen::Index>(j)) = apply_minmax(scaler, x);
    }
  }

  std::size_t present_labels = 0;
  for (const auto& name : pipeline.labels) present_labels += table.has_column(name) ? 1 : 0;
  if (present_labels != 0 && present_labels != pipeline.labels.size()) {
    throw Error(ErrorKind::mismatch, "table carries only some of the label columns");
  }
  if (present_labels) {
    out.label_columns = pipeline.labels;
    out.labels.resize(n, static_cast<Eigen::Index>(pipeline.labels.size()));
    for (std::size_t l = 0; l < pipeline.labels.size(); ++l) {
      const auto& cells = std::get<LabelCells>(column(pipeline.labels[l], Role::label));
      for (Eigen::Index r = 0; r < n; ++r) {
        out.labels(r, static_cast<Eigen::Index>(l)) = cells[static_cast<std::size_t>(r)];
      }
    }
  } else {
    out.labels.resize(n, 0);
  }
  return out;
}

void save_pipeline(const PrepPipeline& pipeline, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, fmt::format("cannot write '{}'", path));
  out << pipeline.serialize();
  if (!out) throw Error(ErrorKind::io, fmt::format("failed writing '{}'", path));
}

PrepPipeline load_pipeline(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, fmt::format("cannot open pipeline '{}'", path));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return PrepPipeline::deserialize(buffer.str());
}

}  // namespace adpred
