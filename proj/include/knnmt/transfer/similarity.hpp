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

// Cross-lingual representational similarity. xsim averages, over
// meaning-equivalent sentences, the mean cosine between the two languages'
// context vectors at matching target timesteps.

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <vector>

#include "knnmt/transfer/context_dumps.hpp"

namespace knnmt {

/// Cosine similarity in double precision; 0 if either vector is zero.
inline double cosine(std::span<const float> a, std::span<const float> b) noexcept {
  double dot = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += double(a[i]) * double(b[i]);
    na += double(a[i]) * double(a[i]);
    nb += double(b[i]) * double(b[i]);
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

enum class TimestepWeighting {
  mean,          // 1 / (shared timesteps of the sentence)
  inverse_step,  // 1 / t for 1-based t, summed without renormalising
};

struct XsimOptions {
  TimestepWeighting weighting = TimestepWeighting::mean;
};

/// Mean over shared sentences of the per-sentence timestep average of cosines.
/// Sentences are visited by id and timesteps in order, so xsim(a, b) and
/// xsim(b, a) perform the same floating-point operations.
inline double xsim(const ContextDumpSet& dumps, const LanguageTag& l1, const LanguageTag& l2,
                   const XsimOptions& opts = {}) {
  const auto& s1 = dumps.sentences(l1);
  const auto& s2 = dumps.sentences(l2);
  double total = 0.0;
  size_t counted = 0;
  auto it1 = s1.begin();
  auto it2 = s2.begin();
  while (it1 != s1.end() && it2 != s2.end()) {
    if (it1->first < it2->first) {
      ++it1;
      continue;
    }
    if (it2->first < it1->first) {
      ++it2;
      continue;
    }
    const auto& a = it1->second;
    const auto& b = it2->second;
    double sum = 0.0;
    size_t shared = 0;
    for (size_t i = 0, j = 0; i < a.size() && j < b.size();) {
      if (a[i].first < b[j].first) {
        ++i;
      } else if (b[j].first < a[i].first) {
        ++j;
      } else {
        double c = cosine(dumps.row(l1, a[i].second), dumps.row(l2, b[j].second));
        if (opts.weighting == TimestepWeighting::inverse_step) c /= static_cast<double>(a[i].first + 1);
        sum += c;
        ++shared;
        ++i;
        ++j;
      }
    }
    if (shared > 0) {
      total += opts.weighting == TimestepWeighting::mean ? sum / static_cast<double>(shared) : sum;
      ++counted;
    }
    ++it1;
    ++it2;
  }
  require(counted > 0, ErrorCode::no_overlap, l1.code() + " and " + l2.code() + " share no sentence timesteps");
  return total / static_cast<double>(counted);
}

/// Symmetric language-by-language xsim matrix with unit diagonal.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  explicit SimilarityMatrix(std::vector<LanguageTag> langs)
      : langs_(std::move(langs)), values_(langs_.size() * langs_.size(), 0.0) {
    for (size_t i = 0; i < langs_.size(); ++i) values_[i * langs_.size() + i] = 1.0;
  }

  const std::vector<LanguageTag>& languages() const noexcept { return langs_; }

  bool contains(const LanguageTag& l) const { return std::find(langs_.begin(), langs_.end(), l) != langs_.end(); }

  double at(const LanguageTag& a, const LanguageTag& b) const { return values_[index(a) * langs_.size() + index(b)]; }

  void set(const LanguageTag& a, const LanguageTag& b, double v) {
    require(v >= -1.0 - 1e-9 && v <= 1.0 + 1e-9, ErrorCode::invalid_argument, "similarity outside [-1, 1]");
    size_t i = index(a), j = index(b);
    values_[i * langs_.size() + j] = v;
    values_[j * langs_.size() + i] = v;
  }

 private:
  size_t index(const LanguageTag& l) const {
    auto it = std::find(langs_.begin(), langs_.end(), l);
    require(it != langs_.end(), ErrorCode::incomplete_table, "language " + l.code() + " not in similarity matrix");
    return static_cast<size_t>(it - langs_.begin());
  }

  std::vector<LanguageTag> langs_;
  std::vector<double> values_;
};

inline SimilarityMatrix similarity_matrix(const ContextDumpSet& dumps, const std::vector<LanguageTag>& langs,
                                          const XsimOptions& opts = {}) {
  SimilarityMatrix m(langs);
  for (size_t i = 0; i < langs.size(); ++i)
    for (size_t j = i + 1; j < langs.size(); ++j) m.set(langs[i], langs[j], xsim(dumps, langs[i], langs[j], opts));
  return m;
}

/// Value of the auxiliary similarity objective for one batch: the sum over
/// aligned rows of cos(row1_t, row2_t). With `center`, the mean of all 2n rows
/// is subtracted from every row first.
inline double xsim_loss(const Eigen::MatrixXd& contexts1, const Eigen::MatrixXd& contexts2, bool center) {
  require(contexts1.rows() == contexts2.rows() && contexts1.cols() == contexts2.cols(), ErrorCode::shape_mismatch,
          "context batches of shape " + std::to_string(contexts1.rows()) + "x" + std::to_string(contexts1.cols()) +
              " and " + std::to_string(contexts2.rows()) + "x" + std::to_string(contexts2.cols()));
  Eigen::MatrixXd a = contexts1, b = contexts2;
  if (center && a.rows() > 0) {
    Eigen::RowVectorXd mean = (a.colwise().sum() + b.colwise().sum()) / static_cast<double>(2 * a.rows());
    a.rowwise() -= mean;
    b.rowwise() -= mean;
  }
  double total = 0.0;
  for (Eigen::Index t = 0; t < a.rows(); ++t) {
    double na = a.row(t).norm(), nb = b.row(t).norm();
    if (na == 0.0 || nb == 0.0) continue;
    total += a.row(t).dot(b.row(t)) / (na * nb);
  }
  return total;
}

}  // namespace knnmt
