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

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pmbr {

// Seeded random stream derived from a global seed plus labels.
//
// Derivation: the labels are folded into one 64-bit key with SplitMix64
// finalizers (strings hashed with 64-bit FNV-1a first), then the key seeds a
// std::mt19937_64. Both algorithms are fully specified, so identical
// (seed, labels) give identical draws on every platform. Bounded draws use
// rejection sampling rather than std::uniform_int_distribution, whose output
// is implementation-defined.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view instance_id,
            std::uint64_t trial, std::string_view purpose,
            std::uint64_t index = 0);

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  static std::uint64_t derive_key(std::uint64_t seed,
                                  std::string_view instance_id,
                                  std::uint64_t trial,
                                  std::string_view purpose,
                                  std::uint64_t index);

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view text);

}  // namespace pmbr
