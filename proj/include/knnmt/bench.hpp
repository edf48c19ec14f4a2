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

// Retrieval throughput against store size. One "token" is one decoding step's
// worth of retrieval work: a k-nearest query, the kNN softmax and the
// interpolation with a base distribution.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <vector>

#include "knnmt/decode/distribution.hpp"
#include "knnmt/random.hpp"
#include "knnmt/vecstore/datastore.hpp"

namespace knnmt {

struct BenchConfig {
  std::vector<size_t> sizes;
  uint32_t dim = 64;
  uint32_t vocab_size = 1000;
  size_t clusters = 256;  // generative clusters of the synthetic keys
  size_t queries = 100;
  size_t warmup = 10;  // untimed queries run first
  KnnConfig knn;
  bool cell_probe = true;
  uint32_t n_cells = 0;
  uint32_t n_probe = 8;
  uint32_t train_per_cell = 64;  // k-means sample size per cell
  uint64_t seed = 1;
};

struct BenchPoint {
  IndexKind kind = IndexKind::exact_scan;
  size_t size = 0;
  size_t tokens = 0;
  double seconds = 0.0;
  double build_seconds = 0.0;
  double tokens_per_sec = 0.0;
};

struct BenchReport {
  std::vector<BenchPoint> points;
  bool exact_strictly_decreasing = false;
  std::optional<bool> cell_faster_at_largest;  // unset without cell-probe runs

  bool monotone() const { return exact_strictly_decreasing && cell_faster_at_largest.value_or(true); }
};

namespace detail {

// Keys drawn around seeded cluster centres; the first n rows do not depend on
// how many are requested, so smaller stores are prefixes of larger ones.
inline Datastore synthetic_store(size_t n, const BenchConfig& cfg, const IndexSpec& spec) {
  Rng centre_rng(hash_combine(cfg.seed, 0xCE27E5));
  std::vector<float> centres(cfg.clusters * cfg.dim);
  for (auto& c : centres) c = static_cast<float>(centre_rng.normal());
  Rng rng(hash_combine(cfg.seed, 0x5707E));
  DatastoreBuilder builder(cfg.dim, cfg.vocab_size);
  std::vector<float> key(cfg.dim);
  const LanguageTag lang("xx");
  for (size_t i = 0; i < n; ++i) {
    size_t c = rng.below(cfg.clusters);
    for (uint32_t j = 0; j < cfg.dim; ++j) key[j] = centres[c * cfg.dim + j] + 0.3f * static_cast<float>(rng.normal());
    builder.add(key, static_cast<TokenId>(kEosId + 1 + rng.below(cfg.vocab_size - kEosId - 1)),
                static_cast<uint32_t>(i / 16), static_cast<uint32_t>(i % 16), lang);
  }
  return std::move(builder).finish(spec);
}

inline std::vector<std::vector<float>> bench_queries(const Datastore& smallest, size_t count, uint64_t seed) {
  Rng rng(hash_combine(seed, 0x9E7));
  std::vector<std::vector<float>> out(count);
  for (auto& q : out) {
    auto key = smallest.key(rng.below(smallest.size()));
    q.assign(key.begin(), key.end());
    for (auto& x : q) x += 0.1f * static_cast<float>(rng.normal());
  }
  return out;
}

inline BenchPoint time_store(const Datastore& store, const std::vector<std::vector<float>>& queries,
                             const BenchConfig& cfg) {
  using Clock = std::chrono::steady_clock;
  const auto base = VocabDistribution::uniform(cfg.vocab_size);
  const size_t k = std::min(cfg.knn.k, store.size());
  double sink = 0.0;
  auto one = [&](const std::vector<float>& q) {
    auto nn = store.query(q, k);
    auto p = interpolate(knn_distribution(nn, cfg.knn.temperature, cfg.vocab_size), base, cfg.knn.lambda);
    sink += p.max();
  };
  for (size_t i = 0; i < std::min(cfg.warmup, queries.size()); ++i) one(queries[i]);
  auto t0 = Clock::now();
  for (const auto& q : queries) one(q);
  double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  require(sink > 0.0, ErrorCode::internal, "benchmark produced an empty distribution");
  BenchPoint p;
  p.kind = store.index_spec().kind;
  p.size = store.size();
  p.tokens = queries.size();
  p.seconds = secs;
  p.tokens_per_sec = secs > 0.0 ? static_cast<double>(queries.size()) / secs : 0.0;
  return p;
}

}  // namespace detail

/// Times exact-scan (and optionally cell-probe) retrieval on synthetic stores
/// of each requested size, smallest first.
inline BenchReport run_bench(BenchConfig cfg) {
  require(cfg.sizes.size() >= 2, ErrorCode::invalid_argument, "benchmark needs at least two store sizes");
  std::sort(cfg.sizes.begin(), cfg.sizes.end());
  require(std::adjacent_find(cfg.sizes.begin(), cfg.sizes.end()) == cfg.sizes.end(), ErrorCode::invalid_argument,
          "benchmark sizes must be distinct");
  require(cfg.sizes.front() >= 1 && cfg.queries >= 1 && cfg.clusters >= 1, ErrorCode::invalid_argument,
          "benchmark sizes, queries and clusters must be positive");
  require(cfg.vocab_size > kEosId + 1, ErrorCode::invalid_argument, "vocabulary too small");
  cfg.knn.validate();

  BenchReport report;
  std::vector<std::vector<float>> queries;
  using Clock = std::chrono::steady_clock;
  for (size_t n : cfg.sizes) {
    auto t0 = Clock::now();
    Datastore exact = detail::synthetic_store(n, cfg, IndexSpec{});
    double build = std::chrono::duration<double>(Clock::now() - t0).count();
    if (queries.empty()) queries = detail::bench_queries(exact, cfg.queries, cfg.seed);
    report.points.push_back(detail::time_store(exact, queries, cfg));
    report.points.back().build_seconds = build;
    if (cfg.cell_probe) {
      IndexSpec spec;
      spec.kind = IndexKind::cell_probe;
      spec.n_cells = cfg.n_cells;
      spec.n_probe = cfg.n_probe;
      spec.max_train_per_cell = cfg.train_per_cell;
      t0 = Clock::now();
      Datastore cell = exact.with_index(spec);
      build = std::chrono::duration<double>(Clock::now() - t0).count();
      report.points.push_back(detail::time_store(cell, queries, cfg));
      report.points.back().build_seconds = build;
    }
  }

  std::vector<double> exact_rate, cell_rate;
  for (const auto& p : report.points)
    (p.kind == IndexKind::exact_scan ? exact_rate : cell_rate).push_back(p.tokens_per_sec);
  report.exact_strictly_decreasing = true;
  for (size_t i = 1; i < exact_rate.size(); ++i)
    if (!(exact_rate[i] < exact_rate[i - 1])) report.exact_strictly_decreasing = false;
  if (!cell_rate.empty()) report.cell_faster_at_largest = cell_rate.back() > exact_rate.back();
  return report;
}

}  // namespace knnmt
