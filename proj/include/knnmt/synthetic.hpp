/* Copyright 2026 The knnmt Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

// Seeded generator for small multilingual toy corpora into a shared target
// language. Target sentences are sequences of "concepts"; each source language
// belongs to a family whose word forms it shares except for a fraction of
// language-private forms. Training sets are sampled from one sentence pool, so
// languages overlap in multi-parallel sentences; the test set is fully
// multi-parallel.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "knnmt/decode/corpus.hpp"
#include "knnmt/language.hpp"
#include "knnmt/random.hpp"

namespace knnmt {

struct ToyLanguageSpec {
  LanguageTag lang;
  std::string family;
  size_t train_sentences = 1000;
  double private_rate = 0.3;  // share of concepts with a language-private word
  bool reorder = false;       // emit source words in reverse concept order
};

struct ToyCorpusSpec {
  uint64_t seed = 1;
  size_t concepts = 150;
  size_t pool_sentences = 4000;
  size_t test_sentences = 100;
  size_t min_len = 3;
  size_t max_len = 8;
  LanguageTag target = LanguageTag("en");
  std::vector<ToyLanguageSpec> languages;

  static ToyCorpusSpec default_spec(uint64_t seed) {
    ToyCorpusSpec s;
    s.seed = seed;
    s.languages = {
        {LanguageTag("de"), "germanic", 2000, 0.30, false}, {LanguageTag("nl"), "germanic", 1500, 0.30, false},
        {LanguageTag("af"), "germanic", 300, 0.35, false},  {LanguageTag("ru"), "slavic", 2000, 0.30, true},
        {LanguageTag("uk"), "slavic", 1200, 0.30, true},    {LanguageTag("be"), "slavic", 200, 0.35, true},
    };
    return s;
  }
};

struct ToyCorpus {
  LanguageTag target;
  std::vector<std::string> vocab;
  std::map<LanguageTag, ParallelText> train;
  std::map<LanguageTag, ParallelText> test;
  std::map<LanguageTag, std::string> family;
};

inline ToyCorpus generate_toy_corpus(const ToyCorpusSpec& spec) {
  require(!spec.languages.empty(), ErrorCode::invalid_argument, "toy corpus needs at least one source language");
  require(spec.concepts >= 2 && spec.min_len >= 1 && spec.max_len >= spec.min_len, ErrorCode::invalid_argument,
          "bad toy corpus shape");
  Rng rng(spec.seed);
  ToyCorpus out;
  out.target = spec.target;
  out.vocab = {"<pad>", "<s>", "</s>"};

  auto target_word = [&](size_t c) { return "w" + std::to_string(c); };
  for (size_t c = 0; c < spec.concepts; ++c) out.vocab.push_back(target_word(c));

  // word form per (language, concept)
  std::map<std::string, bool> families;
  for (const auto& l : spec.languages) families[l.family] = true;
  for (const auto& [fam, _] : families)
    for (size_t c = 0; c < spec.concepts; ++c) out.vocab.push_back(fam + "_" + std::to_string(c));
  std::map<LanguageTag, std::vector<std::string>> lexicon;
  for (const auto& l : spec.languages) {
    Rng lrng(hash_combine(spec.seed, stable_hash(l.lang.code())));
    auto& words = lexicon[l.lang];
    for (size_t c = 0; c < spec.concepts; ++c) {
      if (lrng.uniform() < l.private_rate) {
        words.push_back(l.lang.code() + "_" + std::to_string(c));
        out.vocab.push_back(words.back());
      } else {
        words.push_back(l.family + "_" + std::to_string(c));
      }
    }
    out.family[l.lang] = l.family;
  }

  // Zipf-like concept frequencies
  std::vector<double> cdf(spec.concepts);
  double acc = 0.0;
  for (size_t c = 0; c < spec.concepts; ++c) cdf[c] = (acc += 1.0 / std::pow(static_cast<double>(c + 1), 0.8));
  auto draw_concept = [&](Rng& r) {
    double u = r.uniform() * acc;
    return static_cast<size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
  };
  auto draw_sentence = [&](Rng& r) {
    size_t len = spec.min_len + r.below(spec.max_len - spec.min_len + 1);
    std::vector<size_t> s(len);
    for (auto& c : s) c = std::min(draw_concept(r), spec.concepts - 1);
    return s;
  };
  std::vector<std::vector<size_t>> pool(spec.pool_sentences), test(spec.test_sentences);
  for (auto& s : pool) s = draw_sentence(rng);
  for (auto& s : test) s = draw_sentence(rng);

  auto render = [&](const std::vector<size_t>& concepts, const ToyLanguageSpec* l) {
    std::string line;
    auto emit = [&](size_t c) {
      if (!line.empty()) line += ' ';
      line += l == nullptr ? target_word(c) : lexicon[l->lang][c];
    };
    if (l != nullptr && l->reorder) {
      for (auto it = concepts.rbegin(); it != concepts.rend(); ++it) emit(*it);
    } else {
      for (size_t c : concepts) emit(c);
    }
    return line;
  };

  for (const auto& l : spec.languages) {
    Rng lrng(hash_combine(spec.seed ^ 0xC0FFEEull, stable_hash(l.lang.code())));
    std::vector<size_t> order(pool.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    lrng.shuffle(std::span<size_t>(order));
    size_t n = std::min(l.train_sentences, pool.size());
    order.resize(n);
    std::sort(order.begin(), order.end());
    ParallelText train, held;
    for (size_t i : order) {
      train.source.push_back(render(pool[i], &l));
      train.target.push_back(render(pool[i], nullptr));
    }
    for (const auto& s : test) {
      held.source.push_back(render(s, &l));
      held.target.push_back(render(s, nullptr));
    }
    out.train[l.lang] = std::move(train);
    out.test[l.lang] = std::move(held);
  }
  return out;
}

}  // namespace knnmt
