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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "knnmt/error.hpp"
#include "knnmt/vecstore/record.hpp"

namespace knnmt {

/// Probability vector over a token vocabulary.
class VocabDistribution {
 public:
  static constexpr double kSumTolerance = 1e-9;

  VocabDistribution() = default;

  /// Validates non-negativity and unit mass.
  explicit VocabDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
    double sum = 0.0;
    for (double p : probs_) {
      require(p >= 0.0 && std::isfinite(p), ErrorCode::invalid_argument, "negative or non-finite probability");
      sum += p;
    }
    require(std::abs(sum - 1.0) <= kSumTolerance, ErrorCode::invalid_argument,
            "distribution sums to " + std::to_string(sum));
  }

  static VocabDistribution uniform(size_t vocab_size) {
    return VocabDistribution(std::vector<double>(vocab_size, 1.0 / static_cast<double>(vocab_size)));
  }

  static VocabDistribution one_hot(size_t vocab_size, TokenId token) {
    std::vector<double> p(vocab_size, 0.0);
    p.at(token) = 1.0;
    return VocabDistribution(std::move(p));
  }

  size_t size() const noexcept { return probs_.size(); }
  double operator[](size_t i) const noexcept { return probs_[i]; }
  std::span<const double> probs() const noexcept { return probs_; }

  double sum() const noexcept { return std::accumulate(probs_.begin(), probs_.end(), 0.0); }

  /// Most probable token; the lowest id wins ties.
  TokenId argmax() const noexcept {
    return static_cast<TokenId>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
  }

  double max() const noexcept { return *std::max_element(probs_.begin(), probs_.end()); }

 private:
  struct Unchecked {};
  VocabDistribution(std::vector<double> probs, Unchecked) : probs_(std::move(probs)) {}

  friend VocabDistribution knn_distribution(std::span<const Neighbor>, double, size_t);
  friend VocabDistribution interpolate(const VocabDistribution&, const VocabDistribution&, double);

  std::vector<double> probs_;
};

struct KnnConfig {
  size_t k = 32;
  double lambda = 0.5;
  double temperature = 10.0;

  void validate() const {
    require(k >= 1, ErrorCode::invalid_argument, "k must be >= 1");
    require(lambda >= 0.0 && lambda <= 1.0, ErrorCode::invalid_argument, "lambda must lie in [0, 1]");
    require(temperature > 0.0 && std::isfinite(temperature), ErrorCode::invalid_argument, "temperature must be > 0");
  }
};

/// Temperature softmax over negative squared distances, aggregated per token:
/// p(v) is proportional to the sum of exp(-d_j / T) over neighbors with value v.
/// Tokens not retrieved get exactly zero mass.
inline VocabDistribution knn_distribution(std::span<const Neighbor> neighbors, double temperature, size_t vocab_size) {
  require(!neighbors.empty(), ErrorCode::empty_retrieval, "no neighbors retrieved");
  require(temperature > 0.0, ErrorCode::invalid_argument, "temperature must be > 0");
  double nearest = neighbors.front().distance;
  for (const auto& n : neighbors) nearest = std::min(nearest, n.distance);
  std::vector<double> p(vocab_size, 0.0);
  double total = 0.0;
  for (const auto& n : neighbors) {
    require(n.token_id < vocab_size, ErrorCode::dimension_mismatch, "neighbor token outside vocabulary");
    // shifting by the nearest distance cancels in the normalisation
    double w = std::exp(-(n.distance - nearest) / temperature);
    p[n.token_id] += w;
    total += w;
  }
  for (double& x : p) x /= total;
  return VocabDistribution(std::move(p), VocabDistribution::Unchecked{});
}

/// lambda * p_knn + (1 - lambda) * p_base.
inline VocabDistribution interpolate(const VocabDistribution& p_knn, const VocabDistribution& p_base, double lambda) {
  require(p_knn.size() == p_base.size(), ErrorCode::dimension_mismatch,
          "interpolating distributions over " + std::to_string(p_knn.size()) + " and " +
              std::to_string(p_base.size()) + " tokens");
  require(lambda >= 0.0 && lambda <= 1.0, ErrorCode::invalid_argument, "lambda must lie in [0, 1]");
  std::vector<double> out(p_base.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = lambda * p_knn[i] + (1.0 - lambda) * p_base[i];
  return VocabDistribution(std::move(out), VocabDistribution::Unchecked{});
}

}  // namespace knnmt
