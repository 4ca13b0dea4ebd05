/*
 * Copyright 2026 The pruning-mbr Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "pmbr/rng.hpp"

#include <stdexcept>

namespace pmbr {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t RngStream::derive_key(std::uint64_t seed,
                                    std::string_view instance_id,
                                    std::uint64_t trial,
                                    std::string_view purpose,
                                    std::uint64_t index) {
  std::uint64_t key = splitmix64(seed);
  key = splitmix64(key ^ fnv1a64(instance_id));
  key = splitmix64(key ^ trial);
  key = splitmix64(key ^ fnv1a64(purpose));
  key = splitmix64(key ^ index);
  return key;
}

RngStream::RngStream(std::uint64_t seed, std::string_view instance_id,
                     std::uint64_t trial, std::string_view purpose,
                     std::uint64_t index)
    : engine_(derive_key(seed, instance_id, trial, purpose, index)) {}

std::uint64_t RngStream::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("RngStream::below(0)");
  // 2^64 mod bound; draws under this value would bias the modulo.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = engine_();
    if (r >= threshold) return r % bound;
  }
}

}  // namespace pmbr
