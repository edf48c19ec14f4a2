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
#include <vector>

#include "knnmt/error.hpp"

namespace knnmt {

/// 1-based ranks; tied values share the average of their positions.
inline std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<size_t> order(xs.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  for (size_t i = 0; i < order.size();) {
    size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

struct Correlation {
  double rho = 0.0;
  size_t n = 0;
};

/// Pearson correlation of the average ranks.
inline Correlation spearman(std::span<const double> xs, std::span<const double> ys) {
  require(xs.size() == ys.size(), ErrorCode::shape_mismatch,
          "spearman over " + std::to_string(xs.size()) + " and " + std::to_string(ys.size()) + " values");
  require(xs.size() >= 3, ErrorCode::insufficient_data, "spearman needs at least 3 pairs");
  for (size_t i = 0; i < xs.size(); ++i)
    require(std::isfinite(xs[i]) && std::isfinite(ys[i]), ErrorCode::invalid_argument, "non-finite value");
  auto rx = average_ranks(xs), ry = average_ranks(ys);
  const double n = static_cast<double>(xs.size());
  double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  require(sxx > 0 && syy > 0, ErrorCode::insufficient_data, "spearman is undefined for a constant input");
  return {std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0), xs.size()};
}

}  // namespace knnmt
