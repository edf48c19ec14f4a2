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

// A count-based stand-in for a neural translation model, so the retrieval
// pipeline runs end to end without one.
//
//   next_distribution: add-one smoothed target bigram count times a coverage
//     term over the source bag. Each source token spends one unit of demand
//     over the target tokens it co-occurs with more often than chance; a
//     token's weight is the demand the prefix has not yet met, and
//     end-of-sequence gets whatever remains below one unit. Restricted to
//     tokens seen with at least one source token (plus end-of-sequence).
//   featurize: seeded-hash embedding of the source bag and the last two prefix
//     tokens, L2-normalised.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "knnmt/decode/base_model.hpp"
#include "knnmt/error.hpp"
#include "knnmt/random.hpp"

namespace knnmt {

struct SentencePair {
  std::vector<TokenId> source;
  std::vector<TokenId> target;
};

inline constexpr uint64_t kFeatureSeed = 0x5EED;

/// Hashed context embedding. Every (slot, token) feature owns a dense
/// pseudo-random sign vector; a context is the weighted sum of its features.
class HashFeaturizer {
 public:
  HashFeaturizer(size_t dim, uint64_t seed = kFeatureSeed) : dim_(dim), seed_(seed) {
    require(dim > 0, ErrorCode::invalid_argument, "featurizer dimension must be positive");
  }

  size_t dim() const noexcept { return dim_; }

  std::vector<float> operator()(std::span<const TokenId> source, std::span<const TokenId> prefix) const {
    std::vector<double> acc(dim_, 0.0);
    if (!source.empty()) {
      double w = kSourceWeight / std::sqrt(static_cast<double>(source.size()));
      for (TokenId s : source) add(acc, kSlotSource, s, w);
    }
    TokenId last = prefix.empty() ? kBosId : prefix.back();
    TokenId before = prefix.size() < 2 ? (prefix.empty() ? kPadId : kBosId) : prefix[prefix.size() - 2];
    add(acc, kSlotLast, last, kLastWeight);
    add(acc, kSlotBefore, before, kBeforeWeight);

    double norm = 0.0;
    for (double x : acc) norm += x * x;
    norm = std::sqrt(norm);
    std::vector<float> out(dim_);
    for (size_t i = 0; i < dim_; ++i) out[i] = static_cast<float>(norm > 0 ? acc[i] / norm : 0.0);
    return out;
  }

 private:
  static constexpr uint64_t kSlotSource = 1, kSlotLast = 2, kSlotBefore = 3;
  static constexpr double kSourceWeight = 1.0, kLastWeight = 1.0, kBeforeWeight = 0.5;

  void add(std::vector<double>& acc, uint64_t slot, TokenId token, double weight) const {
    uint64_t h = hash_combine(hash_combine(seed_, slot), token);
    const double scaled = weight / std::sqrt(static_cast<double>(dim_));
    for (size_t i = 0; i < dim_; i += 64) {
      uint64_t bits = splitmix64(h + i);
      for (size_t j = 0; j < 64 && i + j < dim_; ++j) acc[i + j] += ((bits >> j) & 1u) ? scaled : -scaled;
    }
  }

  size_t dim_;
  uint64_t seed_;
};

class ToyBaseModel final : public BaseModel {
 public:
  ToyBaseModel(const std::vector<SentencePair>& corpus, size_t vocab_size, size_t dim)
      : vocab_size_(vocab_size), featurizer_(dim) {
    require(!corpus.empty(), ErrorCode::untrained_model, "toy model needs a non-empty corpus");
    require(vocab_size > kEosId, ErrorCode::invalid_argument, "vocabulary must include the reserved ids");
    // sentence-level presence counts
    std::unordered_map<TokenId, uint32_t> src_count, tgt_count;
    std::unordered_map<TokenId, std::unordered_map<TokenId, uint32_t>> joint;
    std::vector<TokenId> src_set, tgt_set;
    for (const auto& pair : corpus) {
      TokenId prev = kBosId;
      for (TokenId t : pair.target) {
        check(t);
        ++bigram_[key(prev, t)];
        prev = t;
      }
      ++bigram_[key(prev, kEosId)];

      src_set.assign(pair.source.begin(), pair.source.end());
      std::sort(src_set.begin(), src_set.end());
      src_set.erase(std::unique(src_set.begin(), src_set.end()), src_set.end());
      tgt_set.assign(pair.target.begin(), pair.target.end());
      std::sort(tgt_set.begin(), tgt_set.end());
      tgt_set.erase(std::unique(tgt_set.begin(), tgt_set.end()), tgt_set.end());
      for (TokenId t : tgt_set) ++tgt_count[t];
      for (TokenId s : src_set) {
        check(s);
        ++src_count[s];
        auto& row = joint[s];
        for (TokenId t : tgt_set) ++row[t];
      }
    }

    // Demand shares: excess of P(t | s) over P(t) beyond kZ standard errors,
    // plus a small multiple of P(t | s) so that every co-occurring token keeps
    // some share. Shares of one source token sum to 1.
    const double n = static_cast<double>(corpus.size());
    for (auto& [s, row] : joint) {
      const double cs = src_count[s];
      std::vector<std::pair<TokenId, double>> share;
      double total = 0.0;
      for (const auto& [t, c] : row) {
        const double p_ts = c / cs, p_t = tgt_count[t] / n;
        const double excess = p_ts - p_t - kZ * std::sqrt(p_t * (1.0 - p_t) / cs);
        share.emplace_back(t, std::max(excess, 0.0) + kShareFloor * p_ts);
        total += share.back().second;
      }
      for (auto& [t, w] : share) w /= total;
      std::sort(share.begin(), share.end());
      share_[s] = std::move(share);
    }
  }

  size_t vocab_size() const override { return vocab_size_; }
  size_t dim() const override { return featurizer_.dim(); }

  VocabDistribution next_distribution(std::span<const TokenId> source, std::span<const TokenId> prefix) const override {
    const TokenId prev = prefix.empty() ? kBosId : prefix.back();
    std::vector<double> demand(vocab_size_, 0.0);
    std::vector<char> allowed(vocab_size_, 0);
    allowed[kEosId] = 1;
    for (TokenId s : source) {
      auto it = share_.find(s);
      if (it == share_.end()) continue;
      for (const auto& [t, w] : it->second) {
        demand[t] += w;
        allowed[t] = 1;
      }
    }
    for (TokenId t : prefix)
      if (t < vocab_size_) demand[t] -= 1.0;
    double unmet = 0.0;
    for (size_t t = 0; t < vocab_size_; ++t)
      if (allowed[t] && t != kEosId) unmet += std::max(demand[t], 0.0);

    std::vector<double> p(vocab_size_, 0.0);
    double total = 0.0;
    for (size_t t = 0; t < vocab_size_; ++t) {
      if (!allowed[t]) continue;
      auto it = bigram_.find(key(prev, static_cast<TokenId>(t)));
      double big = it == bigram_.end() ? 0.0 : it->second;
      double rest = t == kEosId ? std::max(1.0 - unmet, 0.0) : std::max(demand[t], 0.0);
      p[t] = (big + 1.0) * (rest + kRestFloor);
      total += p[t];
    }
    for (double& x : p) x /= total;
    return VocabDistribution(std::move(p));
  }

  std::vector<float> featurize(std::span<const TokenId> source, std::span<const TokenId> prefix) const override {
    return featurizer_(source, prefix);
  }

 private:
  static constexpr double kZ = 2.0;
  static constexpr double kShareFloor = 1e-3;
  static constexpr double kRestFloor = 1e-3;

  static uint64_t key(TokenId prev, TokenId next) noexcept { return (static_cast<uint64_t>(prev) << 32) | next; }

  void check(TokenId t) const {
    require(t < vocab_size_, ErrorCode::invalid_argument, "corpus token outside vocabulary");
  }

  size_t vocab_size_;
  HashFeaturizer featurizer_;
  std::unordered_map<uint64_t, uint32_t> bigram_;
  std::unordered_map<TokenId, std::vector<std::pair<TokenId, double>>> share_;  // sorted by token
};

}  // namespace knnmt
