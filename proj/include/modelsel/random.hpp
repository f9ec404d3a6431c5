// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace modelsel {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Order-sensitive combination of seed material into one 64-bit seed.
constexpr std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t p : parts) h = mix64(h ^ mix64(p));
  return h;
}

// FNV-1a; stable across platforms unlike std::hash.
constexpr std::uint64_t hash_id(std::string_view id) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : id) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Uniform in [0, 1) from a seed; 53 mantissa bits.
constexpr double uniform_from_seed(std::uint64_t seed) {
  return static_cast<double>(mix64(seed) >> 11) * 0x1.0p-53;
}

// Salts that keep the per-query streams of different consumers apart.
enum class Stream : std::uint64_t {
  kMonteCarlo = 1,
  kMixing = 2,
  kRouting = 3,
};

// The per-(query, step) mixing draw used by every gamma-mixed strategy.
constexpr double mixing_draw(std::uint64_t seed, std::string_view query_id,
                             std::uint64_t step) {
  return uniform_from_seed(derive_seed(
      {seed, static_cast<std::uint64_t>(Stream::kMixing), hash_id(query_id),
       step}));
}

}  // namespace modelsel
