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

// Search structures over a flat row-major key matrix.
//
// Two kinds are provided: an exhaustive scan, and a cell-probe index that
// partitions keys into k-means cells and scans only the cells whose centroids
// are closest to the query. Probing every cell visits every key, so the
// cell-probe result then coincides with the exhaustive one.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "knnmt/error.hpp"

namespace knnmt {

enum class IndexKind : uint8_t { exact_scan = 0, cell_probe = 1 };

inline std::string_view to_string(IndexKind kind) {
  return kind == IndexKind::exact_scan ? "exact-scan" : "cell-probe";
}

inline IndexKind parse_index_kind(std::string_view name) {
  if (name == "exact" || name == "exact-scan") return IndexKind::exact_scan;
  if (name == "cell" || name == "cell-probe") return IndexKind::cell_probe;
  fail(ErrorCode::invalid_argument, "unknown index kind '" + std::string(name) + "'");
}

struct IndexSpec {
  IndexKind kind = IndexKind::exact_scan;
  uint32_t n_cells = 0;  // 0 picks ~sqrt(n), capped at 1024
  uint32_t n_probe = 1;
  uint32_t iterations = 10;
  // k-means runs on an evenly strided sample of at most this many keys per cell
  uint32_t max_train_per_cell = 256;
};

/// Squared L2 distance, accumulated left to right in double precision.
inline double squared_l2(std::span<const float> a, std::span<const float> b) noexcept {
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sum += diff * diff;
  }
  return sum;
}

namespace detail {

// Eight independent float lanes; a screen in front of the exact distance.
inline float squared_l2_fast(const float* a, const float* b, size_t d) noexcept {
  float acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  size_t i = 0;
  for (; i + 8 <= d; i += 8) {
    for (size_t j = 0; j < 8; ++j) {
      float diff = a[i + j] - b[i + j];
      acc[j] += diff * diff;
    }
  }
  float tail = 0.0f;
  for (; i < d; ++i) {
    float diff = a[i] - b[i];
    tail += diff * diff;
  }
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

}  // namespace detail

struct Candidate {
  double distance;
  uint64_t index;

  friend bool operator<(const Candidate& a, const Candidate& b) noexcept {
    return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
  }
};

/// Bounded selection of the k smallest candidates under (distance, index).
class TopK {
 public:
  explicit TopK(size_t k) : k_(k) { heap_.reserve(k + 1); }

  void offer(double distance, uint64_t index) {
    Candidate c{distance, index};
    if (heap_.size() < k_) {
      heap_.push_back(c);
      std::push_heap(heap_.begin(), heap_.end());
    } else if (c < heap_.front()) {
      std::pop_heap(heap_.begin(), heap_.end());
      heap_.back() = c;
      std::push_heap(heap_.begin(), heap_.end());
    }
  }

  size_t size() const noexcept { return heap_.size(); }

  /// Distance a newcomer has to beat; infinite until k candidates are held.
  double worst() const noexcept {
    return heap_.size() < k_ ? std::numeric_limits<double>::infinity() : heap_.front().distance;
  }

  std::vector<Candidate> take_sorted() {
    std::sort_heap(heap_.begin(), heap_.end());
    return std::move(heap_);
  }

 private:
  size_t k_;
  std::vector<Candidate> heap_;
};

namespace detail {

// Offers row i with its exact distance. The float estimate is computed first;
// when even its error bound puts the row strictly behind the current k-th
// candidate, the exact distance is never needed. The bound covers d+2
// roundings per term (relative) plus subnormal rounding (absolute).
class ScreenedScan {
 public:
  ScreenedScan(std::span<const float> q, size_t k)
      : q_(q),
        top_(k),
        shrink_(1.0 - 2.0 * static_cast<double>(q.size() + 4) * std::numeric_limits<float>::epsilon()),
        floor_(4.0 * static_cast<double>(q.size()) * std::numeric_limits<float>::denorm_min()) {}

  void offer(std::span<const float> row, uint64_t i) {
    const double fast = squared_l2_fast(q_.data(), row.data(), q_.size());
    if (std::isfinite(fast) && fast * shrink_ - floor_ > top_.worst()) return;
    top_.offer(squared_l2(q_, row), i);
  }

  std::vector<Candidate> take_sorted() { return top_.take_sorted(); }

 private:
  std::span<const float> q_;
  TopK top_;
  double shrink_, floor_;
};

}  // namespace detail

inline std::vector<Candidate> exact_scan(std::span<const float> keys, size_t dim, std::span<const float> q,
                                         size_t k) {
  const size_t n = keys.size() / dim;
  detail::ScreenedScan scan(q, k);
  for (size_t i = 0; i < n; ++i) scan.offer(keys.subspan(i * dim, dim), i);
  return scan.take_sorted();
}

/// k-means partition of the keys. Cells hold entry indices in ascending order.
class CellProbeIndex {
 public:
  CellProbeIndex() = default;

  static CellProbeIndex train(std::span<const float> keys, size_t dim, const IndexSpec& spec) {
    const size_t n = keys.size() / dim;
    require(n > 0, ErrorCode::empty_datastore, "cannot train a cell index on zero keys");
    size_t want = spec.n_cells;
    if (want == 0) {
      want = 1;
      while ((want + 1) * (want + 1) <= n) ++want;
      want = std::min<size_t>(want, 1024);
    }
    CellProbeIndex index;
    index.dim_ = dim;
    index.n_probe_ = std::max<uint32_t>(1, spec.n_probe);

    // First n_cells distinct keys seed the centroids.
    std::unordered_set<std::string_view> seen;
    for (size_t i = 0; i < n && index.centroids_.size() / dim < want; ++i) {
      auto row = keys.subspan(i * dim, dim);
      std::string_view bytes(reinterpret_cast<const char*>(row.data()), dim * sizeof(float));
      if (seen.insert(bytes).second) index.centroids_.insert(index.centroids_.end(), row.begin(), row.end());
    }
    const size_t cells = index.centroids_.size() / dim;

    std::vector<size_t> sample;
    const size_t budget = static_cast<size_t>(spec.max_train_per_cell) * cells;
    if (spec.max_train_per_cell == 0 || n <= budget) {
      sample.resize(n);
      for (size_t i = 0; i < n; ++i) sample[i] = i;
    } else {
      sample.resize(budget);
      for (size_t i = 0; i < budget; ++i) sample[i] = static_cast<size_t>((static_cast<__uint128_t>(i) * n) / budget);
    }

    std::vector<uint32_t> assign(sample.size());
    std::vector<double> sums(cells * dim);
    std::vector<size_t> counts(cells);
    for (uint32_t it = 0; it < spec.iterations; ++it) {
      index.nearest_cells(keys, sample.size(), [&](size_t s) { return sample[s]; }, assign);
      std::fill(sums.begin(), sums.end(), 0.0);
      std::fill(counts.begin(), counts.end(), 0);
      for (size_t s = 0; s < sample.size(); ++s) {
        const float* row = &keys[sample[s] * dim];
        double* acc = &sums[assign[s] * dim];
        for (size_t j = 0; j < dim; ++j) acc[j] += row[j];
        ++counts[assign[s]];
      }
      // empty cells keep their previous centroid
      for (size_t c = 0; c < cells; ++c) {
        if (counts[c] == 0) continue;
        for (size_t j = 0; j < dim; ++j)
          index.centroids_[c * dim + j] = static_cast<float>(sums[c * dim + j] / static_cast<double>(counts[c]));
      }
    }

    index.nearest_cells(keys, n, [](size_t i) { return i; }, index.assignment_);
    index.rebuild_lists();
    return index;
  }

  /// Reassembles an index from persisted centroids and per-entry cells.
  static CellProbeIndex from_parts(size_t dim, uint32_t n_probe, std::vector<float> centroids,
                                   std::vector<uint32_t> assignment) {
    CellProbeIndex index;
    index.dim_ = dim;
    index.n_probe_ = std::max<uint32_t>(1, n_probe);
    index.centroids_ = std::move(centroids);
    index.assignment_ = std::move(assignment);
    const size_t cells = index.n_cells();
    for (uint32_t a : index.assignment_)
      require(a < cells, ErrorCode::corrupt_file, "cell assignment outside centroid table");
    index.rebuild_lists();
    return index;
  }

  size_t n_cells() const noexcept { return dim_ == 0 ? 0 : centroids_.size() / dim_; }
  uint32_t n_probe() const noexcept { return n_probe_; }
  std::span<const float> centroids() const noexcept { return centroids_; }
  std::span<const uint32_t> assignment() const noexcept { return assignment_; }
  std::span<const uint64_t> cell(size_t c) const noexcept { return lists_[c]; }

  /// Probes the `n_probe` nearest cells (or more, until at least k keys were
  /// seen) and returns the k best candidates.
  std::vector<Candidate> search(std::span<const float> keys, std::span<const float> q, size_t k,
                                uint32_t n_probe) const {
    const size_t cells = n_cells();
    std::vector<Candidate> order(cells);
    for (size_t c = 0; c < cells; ++c)
      order[c] = {squared_l2(q, std::span<const float>(centroids_).subspan(c * dim_, dim_)), c};
    std::sort(order.begin(), order.end());

    detail::ScreenedScan scan(q, k);
    size_t seen = 0;
    for (size_t p = 0; p < cells; ++p) {
      if (p >= n_probe && seen >= k) break;
      for (uint64_t i : lists_[order[p].index]) scan.offer(keys.subspan(i * dim_, dim_), i);
      seen += lists_[order[p].index].size();
    }
    return scan.take_sorted();
  }

 private:
  // Nearest centroid of each listed key, from |c|^2 - 2 x.c computed in
  // blocks by matrix product. Ties go to the lower cell.
  template <class RowOf>
  void nearest_cells(std::span<const float> keys, size_t count, RowOf row_of, std::vector<uint32_t>& out) const {
    using Mat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    constexpr size_t kBlock = 1024;
    const auto cells = static_cast<Eigen::Index>(n_cells());
    const auto d = static_cast<Eigen::Index>(dim_);
    Eigen::Map<const Mat> c(centroids_.data(), cells, d);
    const Eigen::VectorXf norms = c.rowwise().squaredNorm();
    Mat x(static_cast<Eigen::Index>(std::min(kBlock, count)), d), g;
    out.resize(count);
    for (size_t b = 0; b < count; b += kBlock) {
      const auto m = static_cast<Eigen::Index>(std::min(kBlock, count - b));
      for (Eigen::Index r = 0; r < m; ++r)
        x.row(r) = Eigen::Map<const Eigen::RowVectorXf>(&keys[row_of(b + static_cast<size_t>(r)) * dim_], d);
      g.noalias() = x.topRows(m) * c.transpose();
      for (Eigen::Index r = 0; r < m; ++r) {
        Eigen::Index best = 0;
        float best_d = std::numeric_limits<float>::infinity();
        for (Eigen::Index k = 0; k < cells; ++k) {
          float dist = norms[k] - 2.0f * g(r, k);
          if (dist < best_d) {
            best_d = dist;
            best = k;
          }
        }
        out[b + static_cast<size_t>(r)] = static_cast<uint32_t>(best);
      }
    }
  }

  void rebuild_lists() {
    lists_.assign(n_cells(), {});
    for (size_t i = 0; i < assignment_.size(); ++i) lists_[assignment_[i]].push_back(i);
  }

  size_t dim_ = 0;
  uint32_t n_probe_ = 1;
  std::vector<float> centroids_;
  std::vector<uint32_t> assignment_;
  std::vector<std::vector<uint64_t>> lists_;
};

}  // namespace knnmt
