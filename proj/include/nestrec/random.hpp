#pragma once

// Every random draw in the library comes from a std::mt19937_64 engine seeded
// by derive_seed(master, tag, index). Streams are keyed by purpose so the
// order in which trials execute never changes what any trial sees.

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "nestrec/core.hpp"

namespace nestrec {

using Engine = std::mt19937_64;

/// 64-bit FNV-1a of a purpose tag.
constexpr std::uint64_t tag_hash(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                    std::uint64_t index = 0) {
  return mix64(mix64(master ^ tag_hash(tag)) + mix64(index));
}

inline Engine make_engine(std::uint64_t master, std::string_view tag,
                          std::uint64_t index = 0) {
  return Engine(derive_seed(master, tag, index));
}

/// rows x cols matrix of iid N(0, stddev^2), filled column-major.
Matrix gaussian_matrix(Index rows, Index cols, double stddev, Engine& engine);

Vector gaussian_vector(Index size, double stddev, Engine& engine);

/// Uniformly random k-subset of [0, n) in ascending order (partial
/// Fisher-Yates).
std::vector<Index> random_subset(Index n, Index k, Engine& engine);

} // namespace nestrec
