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

// Dataset features of a language pair, each symmetric in the pair:
//   size_ratio              min/max of the training set sizes
//   vocab_occupancy_ratio   min/max of the shares of the vocabulary each uses
//   src_subword_overlap     Jaccard index of the source token sets
//   multi_parallel_overlap  Jaccard index of the pivot-side sentence sets
//   tgt_ngram_overlap       per-sentence product of target n-gram counts,
//                           weighted by n, over a shared pivot set (unbounded;
//                           min-max scaled across the pair set)

#include <algorithm>
#include <map>
#include <span>
#include <vector>

#include "knnmt/decode/toy_model.hpp"
#include "knnmt/error.hpp"
#include "knnmt/language.hpp"
#include "knnmt/random.hpp"

namespace knnmt {

/// One language's training data, reduced to what the features need.
struct Corpus {
  LanguageTag lang;
  std::vector<std::vector<TokenId>> sentences;  // source side
  std::vector<uint64_t> target_keys;            // identity of each pivot-side sentence

  static uint64_t target_key(std::span<const TokenId> target) noexcept {
    uint64_t h = 0x9E3779B97F4A7C15ull;
    for (TokenId t : target) h = hash_combine(h, t);
    return hash_combine(h, target.size());
  }

  static Corpus from_pairs(LanguageTag lang, std::span<const SentencePair> pairs) {
    Corpus c{std::move(lang), {}, {}};
    for (const auto& p : pairs) {
      c.sentences.push_back(p.source);
      c.target_keys.push_back(target_key(p.target));
    }
    return c;
  }

  size_t size() const noexcept { return sentences.size(); }

  /// Distinct source tokens, reserved ids excluded.
  std::vector<TokenId> usage() const {
    std::vector<TokenId> out;
    for (const auto& s : sentences)
      for (TokenId t : s)
        if (t > kEosId) out.push_back(t);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
};

namespace detail {

template <class T>
double jaccard(std::vector<T> a, std::vector<T> b) {
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  std::vector<T> both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
  const size_t uni = a.size() + b.size() - both.size();
  return uni == 0 ? 0.0 : static_cast<double>(both.size()) / static_cast<double>(uni);
}

inline double min_over_max(double a, double b) { return std::min(a, b) / std::max(a, b); }

}  // namespace detail

inline double size_ratio(const Corpus& c1, const Corpus& c2) {
  require(c1.size() > 0 && c2.size() > 0, ErrorCode::empty_corpus, "size ratio of an empty corpus");
  return detail::min_over_max(static_cast<double>(c1.size()), static_cast<double>(c2.size()));
}

inline double vocab_occupancy_ratio(const Corpus& c1, const Corpus& c2, size_t vocab_size) {
  require(vocab_size > 0, ErrorCode::empty_vocab, "global vocabulary is empty");
  auto u1 = c1.usage(), u2 = c2.usage();
  require(!u1.empty() && !u2.empty(), ErrorCode::empty_vocab, "a corpus uses no vocabulary entries");
  require(u1.back() < vocab_size && u2.back() < vocab_size, ErrorCode::invalid_argument,
          "corpus uses tokens outside the global vocabulary");
  const double v = static_cast<double>(vocab_size);
  return detail::min_over_max(static_cast<double>(u1.size()) / v, static_cast<double>(u2.size()) / v);
}

inline double src_subword_overlap(const Corpus& c1, const Corpus& c2) {
  auto u1 = c1.usage(), u2 = c2.usage();
  require(!u1.empty() && !u2.empty(), ErrorCode::empty_vocab, "a corpus uses no vocabulary entries");
  return detail::jaccard(std::move(u1), std::move(u2));
}

inline double multi_parallel_overlap(const Corpus& c1, const Corpus& c2) {
  for (const Corpus* c : {&c1, &c2}) {
    require(c->size() > 0, ErrorCode::empty_corpus, "multi-parallel overlap of an empty corpus");
    require(c->target_keys.size() == c->size(), ErrorCode::missing_keys,
            c->lang.code() + ": " + std::to_string(c->target_keys.size()) + " target keys for " +
                std::to_string(c->size()) + " sentences");
  }
  return detail::jaccard(c1.target_keys, c2.target_keys);
}

/// Raw overlap: sum over sentences i and n = 1..n_max of n times the dot
/// product of the two sentences' n-gram count vectors.
inline double tgt_ngram_overlap(std::span<const std::vector<TokenId>> targets1,
                                std::span<const std::vector<TokenId>> targets2, size_t n_max = 1) {
  require(targets1.size() == targets2.size(), ErrorCode::misaligned_corpora,
          "target sides of " + std::to_string(targets1.size()) + " and " + std::to_string(targets2.size()) +
              " sentences are not aligned to one pivot set");
  require(n_max >= 1, ErrorCode::invalid_argument, "n_max must be >= 1");
  double total = 0.0;
  for (size_t i = 0; i < targets1.size(); ++i) {
    for (size_t n = 1; n <= n_max; ++n) {
      auto counts = [n](const std::vector<TokenId>& s) {
        std::map<std::vector<TokenId>, uint32_t> c;
        for (size_t j = 0; j + n <= s.size(); ++j) ++c[std::vector<TokenId>(s.begin() + j, s.begin() + j + n)];
        return c;
      };
      auto a = counts(targets1[i]), b = counts(targets2[i]);
      double dot = 0.0;
      for (const auto& [g, ca] : a) {
        auto it = b.find(g);
        if (it != b.end()) dot += static_cast<double>(ca) * it->second;
      }
      total += dot * static_cast<double>(n);
    }
  }
  return total;
}

/// (x - min) / (max - min); a constant column maps to zeros.
inline std::vector<double> minmax_scale(std::span<const double> xs) {
  if (xs.empty()) return {};
  auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  std::vector<double> out(xs.size(), 0.0);
  if (*hi == *lo) return out;
  for (size_t i = 0; i < xs.size(); ++i) out[i] = (xs[i] - *lo) / (*hi - *lo);
  return out;
}

}  // namespace knnmt
