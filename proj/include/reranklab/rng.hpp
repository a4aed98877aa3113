// Copyright 2026 the reranklab authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace reranklab::rng {

// SplitMix64 step. Used only to spread seeds; bulk draws go through
// std::mt19937_64.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// FNV-1a, for folding string ids into substream paths.
inline std::uint64_t hash_str(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Deterministic substream seed: the same (seed, path) always yields the
// same value, and sibling paths are decorrelated.
inline std::uint64_t derive(std::uint64_t seed,
                            std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = seed;
  for (std::uint64_t p : path) {
    std::uint64_t s = h ^ (p + 0x9e3779b97f4a7c15ULL);
    h = splitmix64(s);
  }
  std::uint64_t s = h;
  return splitmix64(s);
}

inline std::mt19937_64 engine(std::uint64_t seed,
                              std::initializer_list<std::uint64_t> path = {}) {
  return std::mt19937_64(derive(seed, path));
}

inline double uniform01(std::mt19937_64& gen) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(gen);
}

inline double gaussian(std::mt19937_64& gen, double mean = 0.0,
                       double stddev = 1.0) {
  return std::normal_distribution<double>(mean, stddev)(gen);
}

}  // namespace reranklab::rng
