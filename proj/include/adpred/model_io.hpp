#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "adpred/network.hpp"

namespace adpred {

/// Binary layout, little-endian:
///   "ADPRNET1"                     8 bytes
///   format version                 u32
///   network config fingerprint     u64
///   pipeline fingerprint           u64 (0 when not bound to a pipeline)
///   config text                    u32 length + bytes
///   block count                    u32
///   per block, in for_each_block order:
///     name                         u32 length + bytes
///     rows, cols                   u64, u64
///     values, row-major            f64 each
struct ModelArtifact {
  static constexpr std::uint32_t format_version = 1;

  NetworkConfig config;
  NetworkParams params;
  std::uint64_t pipeline_fingerprint = 0;
};

void write_model(std::ostream& out, const ModelArtifact& model);
ModelArtifact read_model(std::istream& in);

void save_model(const ModelArtifact& model, const std::string& path);
ModelArtifact load_model(const std::string& path);

}  // namespace adpred
