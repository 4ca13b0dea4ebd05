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

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pmbr {

// Sentence-level chrF++ with the conventions of SacreBLEU 2.x defaults:
// character n-grams over the text with whitespace removed, word n-grams over
// whitespace tokens with one leading or trailing punctuation mark split off,
// and precision/recall averaged over the orders for which both sides have
// n-grams before the single F-beta is taken.
struct ChrfParams {
  int char_order = 6;
  int word_order = 2;
  double beta = 2.0;

  void validate() const;
};

// Pre-extracted n-gram counts for one sentence. Building a profile once per
// unique sentence and reusing it across pairs is what makes pairwise scoring
// of a few hundred sentences cheap.
class ChrfProfile {
 public:
  using Counts = std::vector<std::pair<std::u32string, int>>;  // sorted

  ChrfProfile(std::string_view text, const ChrfParams& params);

  // char orders first (1..char_order), then word orders (1..word_order).
  const std::vector<Counts>& orders() const { return orders_; }

 private:
  std::vector<Counts> orders_;
};

double chrf_pp(const ChrfProfile& hypothesis, const ChrfProfile& reference,
               const ChrfParams& params = {});
double chrf_pp(std::string_view hypothesis, std::string_view reference,
               const ChrfParams& params = {});

// Mean of sentence-level scores (not the aggregate-statistics corpus chrF).
double corpus_score(std::span<const std::string> predictions,
                    std::span<const std::string> references,
                    const ChrfParams& params = {});

namespace detail {
std::u32string decode_utf8(std::string_view text);
bool is_python_space(char32_t c);
std::vector<std::u32string> split_punctuation(const std::u32string& text);
}  // namespace detail

}  // namespace pmbr
