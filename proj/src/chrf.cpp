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

#include "pmbr/chrf.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "pmbr/error.hpp"

namespace pmbr {

namespace detail {

std::u32string decode_utf8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  const auto byte = [&](std::size_t k) {
    return static_cast<unsigned char>(text[k]);
  };
  while (i < text.size()) {
    const unsigned char c = byte(i);
    int len = 0;
    char32_t cp = 0;
    if (c < 0x80) {
      len = 1;
      cp = c;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    }
    bool ok = len > 0 && i + len <= text.size();
    for (int k = 1; ok && k < len; ++k) {
      const unsigned char cc = byte(i + k);
      if ((cc & 0xC0) != 0x80) ok = false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (!ok) {
      // Invalid sequence: keep the raw byte as its own code point.
      out.push_back(c);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

// Matches Python's str.isspace(), which drives str.split().
bool is_python_space(char32_t c) {
  switch (c) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
    case 0x1C: case 0x1D: case 0x1E: case 0x1F: case 0x20:
    case 0x85: case 0xA0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

namespace {

bool is_ascii_punct(char32_t c) {
  static constexpr std::u32string_view kPuncts =
      U"!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";
  return kPuncts.find(c) != std::u32string_view::npos;
}

}  // namespace

std::vector<std::u32string> split_punctuation(const std::u32string& text) {
  std::vector<std::u32string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_python_space(text[i])) ++i;
    if (i == text.size()) break;
    std::size_t j = i;
    while (j < text.size() && !is_python_space(text[j])) ++j;
    std::u32string w = text.substr(i, j - i);
    i = j;
    if (w.size() == 1) {
      tokens.push_back(std::move(w));
    } else if (is_ascii_punct(w.back())) {
      tokens.push_back(w.substr(0, w.size() - 1));
      tokens.push_back(w.substr(w.size() - 1));
    } else if (is_ascii_punct(w.front())) {
      tokens.push_back(w.substr(0, 1));
      tokens.push_back(w.substr(1));
    } else {
      tokens.push_back(std::move(w));
    }
  }
  return tokens;
}

}  // namespace detail

namespace {

ChrfProfile::Counts to_sorted(std::map<std::u32string, int>&& counts) {
  ChrfProfile::Counts out;
  out.reserve(counts.size());
  for (auto& [k, v] : counts) out.emplace_back(k, v);
  return out;
}

ChrfProfile::Counts count_sorted(std::vector<std::u32string> grams) {
  std::sort(grams.begin(), grams.end());
  ChrfProfile::Counts out;
  for (auto& g : grams) {
    if (!out.empty() && out.back().first == g) {
      ++out.back().second;
    } else {
      out.emplace_back(std::move(g), 1);
    }
  }
  return out;
}

struct OrderStats {
  long hyp = 0;
  long ref = 0;
  long match = 0;
};

OrderStats match_stats(const ChrfProfile::Counts& hyp,
                       const ChrfProfile::Counts& ref) {
  OrderStats s;
  for (const auto& e : ref) s.ref += e.second;
  long hyp_total = 0;
  auto r = ref.begin();
  for (const auto& [gram, count] : hyp) {
    hyp_total += count;
    while (r != ref.end() && r->first < gram) ++r;
    if (r != ref.end() && r->first == gram) s.match += std::min(count, r->second);
  }
  // An order with no reference n-grams contributes no hypothesis count.
  s.hyp = ref.empty() ? 0 : hyp_total;
  return s;
}

}  // namespace

void ChrfParams::validate() const {
  if (char_order < 1) throw ValidationError("chrF char order must be >= 1");
  if (word_order < 0) throw ValidationError("chrF word order must be >= 0");
  if (!(beta > 0.0)) throw ValidationError("chrF beta must be > 0");
}

ChrfProfile::ChrfProfile(std::string_view text, const ChrfParams& params) {
  const std::u32string decoded = detail::decode_utf8(text);
  std::u32string chars;
  chars.reserve(decoded.size());
  for (char32_t c : decoded)
    if (!detail::is_python_space(c)) chars.push_back(c);

  orders_.reserve(params.char_order + params.word_order);
  for (int n = 1; n <= params.char_order; ++n) {
    std::vector<std::u32string> grams;
    if (chars.size() >= static_cast<std::size_t>(n)) {
      grams.reserve(chars.size() - n + 1);
      for (std::size_t i = 0; i + n <= chars.size(); ++i)
        grams.push_back(chars.substr(i, n));
    }
    orders_.push_back(count_sorted(std::move(grams)));
  }
  if (params.word_order > 0) {
    const auto words = detail::split_punctuation(decoded);
    for (int n = 1; n <= params.word_order; ++n) {
      std::map<std::u32string, int> counts;
      for (std::size_t i = 0; i + n <= words.size(); ++i) {
        std::u32string gram = words[i];
        for (int k = 1; k < n; ++k) {
          gram.push_back(U' ');
          gram += words[i + k];
        }
        ++counts[gram];
      }
      orders_.push_back(to_sorted(std::move(counts)));
    }
  }
}

double chrf_pp(const ChrfProfile& hypothesis, const ChrfProfile& reference,
               const ChrfParams& params) {
  const auto& h = hypothesis.orders();
  const auto& r = reference.orders();
  if (h.size() != r.size())
    throw ValidationError("chrF profiles built with different parameters");
  const double factor = params.beta * params.beta;
  double avg_prec = 0.0;
  double avg_rec = 0.0;
  int effective_order = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const OrderStats s = match_stats(h[i], r[i]);
    if (s.hyp > 0 && s.ref > 0) {
      avg_prec += static_cast<double>(s.match) / static_cast<double>(s.hyp);
      avg_rec += static_cast<double>(s.match) / static_cast<double>(s.ref);
      ++effective_order;
    }
  }
  if (effective_order == 0) return 0.0;
  avg_prec /= effective_order;
  avg_rec /= effective_order;
  if (avg_prec + avg_rec == 0.0) return 0.0;
  double score = (1 + factor) * avg_prec * avg_rec;
  score /= (factor * avg_prec) + avg_rec;
  return 100 * score;
}

double chrf_pp(std::string_view hypothesis, std::string_view reference,
               const ChrfParams& params) {
  params.validate();
  return chrf_pp(ChrfProfile(hypothesis, params),
                 ChrfProfile(reference, params), params);
}

double corpus_score(std::span<const std::string> predictions,
                    std::span<const std::string> references,
                    const ChrfParams& params) {
  if (predictions.size() != references.size())
    throw ValidationError("corpus_score: " + std::to_string(predictions.size()) +
                          " predictions vs " +
                          std::to_string(references.size()) + " references");
  if (predictions.empty())
    throw ValidationError("corpus_score: empty corpus");
  params.validate();
  // Neumaier summation keeps the mean stable under reordering.
  double sum = 0.0;
  double comp = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double x = chrf_pp(predictions[i], references[i], params);
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  return (sum + comp) / static_cast<double>(predictions.size());
}

}  // namespace pmbr
