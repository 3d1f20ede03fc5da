#include "adpred/model_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "adpred/error.hpp"

namespace adpred {

namespace {

constexpr std::array<char, 8> kMagic{'A', 'D', 'P', 'R', 'N', 'E', 'T', '1'};

template <typename UInt>
void put(std::ostream& out, UInt value) {
  char bytes[sizeof(UInt)];
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xff);
  }
  out.write(bytes, sizeof(UInt));
}

template <typename UInt>
UInt get(std::istream& in) {
  unsigned char bytes[sizeof(UInt)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(UInt))) {
    throw Error(ErrorKind::parse, "model artifact is truncated");
  }
  UInt value = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) value |= static_cast<UInt>(bytes[i]) << (8 * i);
  return value;
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const auto size = get<std::uint32_t>(in);
  std::string s(size, '\0');
  if (size && !in.read(s.data(), size)) throw Error(ErrorKind::parse, "model artifact is truncated");
  return s;
}

}  // namespace

void write_model(std::ostream& out, const ModelArtifact& model) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, ModelArtifact::format_version);
  put<std::uint64_t>(out, model.config.fingerprint());
  put<std::uint64_t>(out, model.pipeline_fingerprint);
  put_string(out, model.config.serialize());
  put<std::uint32_t>(out, static_cast<std::uint32_t>([&] {
    std::size_t n = 0;
    for_each_block(model.params, [&](const std::string&, const Eigen::MatrixXd&) { ++n; });
    return n;
  }()));
  for_each_block(model.params, [&](const std::string& name, const Eigen::MatrixXd& block) {
    put_string(out, name);
    put<std::uint64_t>(out, static_cast<std::uint64_t>(block.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(block.cols()));
    for (Eigen::Index i = 0; i < block.rows(); ++i) {
      for (Eigen::Index j = 0; j < block.cols(); ++j) {
        put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(block(i, j)));
      }
    }
  });
}

ModelArtifact read_model(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw Error(ErrorKind::parse, "not a model artifact");
  }
  if (get<std::uint32_t>(in) != ModelArtifact::format_version) {
    throw Error(ErrorKind::parse, "unsupported model artifact version");
  }
  ModelArtifact model;
  const auto config_hash = get<std::uint64_t>(in);
  model.pipeline_fingerprint = get<std::uint64_t>(in);
  model.config = NetworkConfig::deserialize(get_string(in));
  if (model.config.fingerprint() != config_hash) {
    throw Error(ErrorKind::mismatch, "model artifact config fingerprint does not match its config");
  }
  model.params = init_network(model.config);
  const auto n_blocks = get<std::uint32_t>(in);
  std::uint32_t seen = 0;
  for_each_block(model.params, [&](const std::string& name, Eigen::MatrixXd& block) {
    ++seen;
    if (seen > n_blocks) throw Error(ErrorKind::parse, "model artifact has too few blocks");
    const auto stored = get_string(in);
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    if (stored != name || rows != static_cast<std::uint64_t>(block.rows()) ||
        cols != static_cast<std::uint64_t>(block.cols())) {
      throw Error(ErrorKind::parse,
                  fmt::format("model artifact block '{}' ({}x{}) does not match expected '{}' ({}x{})",
                              stored, rows, cols, name, block.rows(), block.cols()));
    }
    for (Eigen::Index i = 0; i < block.rows(); ++i) {
      for (Eigen::Index j = 0; j < block.cols(); ++j) {
        block(i, j) = std::bit_cast<double>(get<std::uint64_t>(in));
      }
    }
  });
  if (seen != n_blocks) throw Error(ErrorKind::parse, "model artifact has extra blocks");
  if (!all_finite(model.params)) throw Error(ErrorKind::numeric, "model artifact holds non-finite values");
  return model;
}

void save_model(const ModelArtifact& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, fmt::format("cannot write '{}'", path));
  write_model(out, model);
  if (!out) throw Error(ErrorKind::io, fmt::format("failed writing '{}'", path));
}

ModelArtifact load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, fmt::format("cannot open model '{}'", path));
  return read_model(in);
}

}  // namespace adpred
