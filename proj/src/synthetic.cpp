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

#include <cstdio>

#include "pmbr/eval.hpp"

namespace pmbr {

namespace {

double unit(RngStream& rng) {
  return static_cast<double>(rng.next() >> 11) * 0x1.0p-53;
}

std::vector<std::string> make_vocabulary(const SynthOptions& o) {
  static constexpr char kLetters[] = "abcdefghijklmnopqrstuvwxyz";
  RngStream rng(o.seed, "", 0, "synth-vocab");
  std::vector<std::string> vocab;
  vocab.reserve(o.vocab_size);
  for (std::size_t i = 0; i < o.vocab_size; ++i) {
    const std::size_t len = 2 + rng.below(7);
    std::string w;
    for (std::size_t k = 0; k < len; ++k) w.push_back(kLetters[rng.below(26)]);
    vocab.push_back(std::move(w));
  }
  return vocab;
}

// Token-level substitutions, insertions and deletions, each applied with
// probability edit_rate / 3 per gold token.
std::string edit(const std::vector<std::string>& gold,
                 const std::vector<std::string>& vocab, double rate,
                 RngStream& rng) {
  std::vector<std::string> out;
  for (const auto& tok : gold) {
    const double u = unit(rng);
    if (u < rate / 3) continue;
    if (u < 2 * rate / 3) {
      out.push_back(vocab[rng.below(vocab.size())]);
    } else if (u < rate) {
      out.push_back(tok);
      out.push_back(vocab[rng.below(vocab.size())]);
    } else {
      out.push_back(tok);
    }
  }
  std::string s;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i) s += ' ';
    s += out[i];
  }
  return s;
}

}  // namespace

void SynthOptions::validate() const {
  if (n_instances == 0 || n_hypotheses == 0 || pool_size == 0 ||
      vocab_size == 0)
    throw ValidationError("synthetic corpus counts must be positive");
  if (!(edit_rate >= 0.0 && edit_rate <= 1.0))
    throw ValidationError("edit rate must lie in [0, 1]");
  if (min_length == 0 || max_length < min_length)
    throw ValidationError("invalid sentence length range");
}

std::vector<Instance> generate_synthetic(const SynthOptions& o) {
  o.validate();
  const auto vocab = make_vocabulary(o);
  std::vector<Instance> corpus;
  corpus.reserve(o.n_instances);
  for (std::size_t i = 0; i < o.n_instances; ++i) {
    RngStream rng(o.seed, "", 0, "synth-instance", i);
    const std::size_t len =
        o.min_length + rng.below(o.max_length - o.min_length + 1);
    std::vector<std::string> gold;
    for (std::size_t k = 0; k < len; ++k)
      gold.push_back(vocab[rng.below(vocab.size())]);

    Instance inst;
    char id[32];
    std::snprintf(id, sizeof id, "synth-%05zu", i);
    inst.id = id;
    inst.reference = edit(gold, vocab, 0.0, rng);
    for (std::size_t h = 0; h < o.n_hypotheses; ++h)
      inst.hypotheses.push_back(edit(gold, vocab, o.edit_rate, rng));
    for (std::size_t p = 0; p < o.pool_size; ++p)
      inst.pool.push_back(edit(gold, vocab, o.edit_rate, rng));
    corpus.push_back(std::move(inst));
  }
  return corpus;
}

}  // namespace pmbr
