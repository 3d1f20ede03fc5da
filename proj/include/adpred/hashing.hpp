#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace adpred {

// 64-bit FNV-1a. Stable across platforms, used for artifact fingerprints and
// for deriving per-block random streams from a seed.
constexpr std::uint64_t fnv1a(std::string_view bytes,
                              std::uint64_t state = 0xcbf29ce484222325ULL) noexcept {
  for (unsigned char c : bytes) {
    state ^= c;
    state *= 0x100000001b3ULL;
  }
  return state;
}

std::string to_hex(std::uint64_t value);

}  // namespace adpred
