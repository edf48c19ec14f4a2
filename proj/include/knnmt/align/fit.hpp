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

// Cross-lingual alignment of context spaces: paired-context extraction from
// two single-language datastores and least-squares fitting of y = A x.

#include <Eigen/Dense>

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "knnmt/align/linear_map.hpp"
#include "knnmt/linalg.hpp"
#include "knnmt/error.hpp"
#include "knnmt/vecstore/datastore.hpp"

namespace knnmt {

/// Row-aligned context pairs: row i of `src` and row i of `tgt` were produced
/// for the same target token of the same target sentence.
struct PairedContexts {
  uint32_t dim = 0;
  std::vector<float> src;  // rows x dim, row-major
  std::vector<float> tgt;
  LanguageTag source_lang;
  LanguageTag target_lang;

  size_t rows() const noexcept { return dim == 0 ? 0 : src.size() / dim; }
  std::span<const float> src_row(size_t i) const noexcept { return std::span<const float>(src).subspan(i * dim, dim); }
  std::span<const float> tgt_row(size_t i) const noexcept { return std::span<const float>(tgt).subspan(i * dim, dim); }

  void add(std::span<const float> x, std::span<const float> y) {
    require(x.size() == dim && y.size() == dim, ErrorCode::shape_mismatch, "pair row of wrong dimension");
    src.insert(src.end(), x.begin(), x.end());
    tgt.insert(tgt.end(), y.begin(), y.end());
  }

  PairedContexts swapped() const {
    return PairedContexts{dim, tgt, src, target_lang, source_lang};
  }
};

/// (sentence id in the first store, sentence id in the second store)
using SentenceAlignment = std::vector<std::pair<uint32_t, uint32_t>>;

inline SentenceAlignment load_alignment(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io, "cannot open " + path);
  SentenceAlignment out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    long long a = -1, b = -1;
    char tab = 0;
    if (!(fields >> a) || !fields.get(tab) || tab != '\t' || !(fields >> b) || a < 0 || b < 0 || a > UINT32_MAX ||
        b > UINT32_MAX)
      fail(ErrorCode::invalid_argument, path + ":" + std::to_string(lineno) + ": expected 'id<TAB>id'");
    out.emplace_back(static_cast<uint32_t>(a), static_cast<uint32_t>(b));
  }
  return out;
}

inline void save_alignment(const SentenceAlignment& alignment, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::io, "cannot open " + path + " for writing");
  for (const auto& [a, b] : alignment) out << a << '\t' << b << '\n';
}

/// Pairs line i of `targets1` with the first line of `targets2` holding the
/// identical target sentence.
inline SentenceAlignment align_by_target(const std::vector<std::string>& targets1,
                                         const std::vector<std::string>& targets2) {
  std::unordered_map<std::string, uint32_t> first;
  for (size_t j = 0; j < targets2.size(); ++j) first.emplace(targets2[j], static_cast<uint32_t>(j));
  SentenceAlignment out;
  for (size_t i = 0; i < targets1.size(); ++i) {
    auto it = first.find(targets1[i]);
    if (it != first.end()) out.emplace_back(static_cast<uint32_t>(i), it->second);
  }
  return out;
}

namespace detail {

// sentence id -> entry indices ordered by timestep
inline std::unordered_map<uint32_t, std::vector<size_t>> entries_by_sentence(const Datastore& store) {
  std::unordered_map<uint32_t, std::vector<size_t>> out;
  for (size_t i = 0; i < store.size(); ++i) out[store.sentence_id(i)].push_back(i);
  for (auto& [sid, idx] : out)
    std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return store.timestep(a) < store.timestep(b); });
  return out;
}

}  // namespace detail

/// Training pairs for a map from store1's language into store2's. Aligned
/// sentences whose decodes differ in length are dropped; within a kept
/// sentence a timestep contributes a row only when both stores hold the same
/// target token there. Repeated target tokens are not deduplicated.
inline PairedContexts extract_training_pairs(const Datastore& store1, const Datastore& store2,
                                             const SentenceAlignment& alignment) {
  require(store1.dim() == store2.dim(), ErrorCode::dimension_mismatch, "stores differ in dimension");
  require(store1.languages().size() == 1 && store2.languages().size() == 1, ErrorCode::incompatible_stores,
          "training pairs need two single-language stores");
  PairedContexts pairs;
  pairs.dim = store1.dim();
  pairs.source_lang = store1.languages()[0].lang;
  pairs.target_lang = store2.languages()[0].lang;
  auto by1 = detail::entries_by_sentence(store1);
  auto by2 = detail::entries_by_sentence(store2);
  for (const auto& [s1, s2] : alignment) {
    auto a = by1.find(s1);
    auto b = by2.find(s2);
    if (a == by1.end() || b == by2.end() || a->second.size() != b->second.size()) continue;
    for (size_t t = 0; t < a->second.size(); ++t) {
      size_t i = a->second[t], j = b->second[t];
      if (store1.timestep(i) != store2.timestep(j) || store1.token(i) != store2.token(j)) continue;
      pairs.add(store1.key(i), store2.key(j));
    }
  }
  require(pairs.rows() > 0, ErrorCode::empty_pairs, "no aligned contexts share a target token");
  return pairs;
}

struct LinearFit {
  LinearMap map;
  double residual = 0.0;  // sum of squared errors on the training rows
};

/// 1e-6 * trace(X^T X) / d: small enough to leave well-posed fits unchanged.
inline double default_ridge(const PairedContexts& pairs) {
  double trace = 0.0;
  for (float x : pairs.src) trace += static_cast<double>(x) * x;
  return 1e-6 * trace / static_cast<double>(pairs.dim);
}

/// Least-squares A minimising sum_i ||tgt_i - A src_i||^2 + ridge ||A||_F^2,
/// solved through the normal equations (X^T X + ridge I) A^T = X^T Y. No
/// intercept term.
inline LinearFit fit_linear_map(const PairedContexts& pairs, double ridge) {
  require(ridge >= 0.0 && std::isfinite(ridge), ErrorCode::invalid_argument, "ridge must be a finite value >= 0");
  require(pairs.src.size() == pairs.tgt.size(), ErrorCode::shape_mismatch, "paired matrices differ in rows");
  const size_t n = pairs.rows();
  const size_t d = pairs.dim;
  require(n >= 1, ErrorCode::empty_pairs, "cannot fit a map on zero pairs");

  using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Mat x = Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(pairs.src.data(), n, d)
              .cast<double>();
  Mat y = Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(pairs.tgt.data(), n, d)
              .cast<double>();

  Eigen::MatrixXd gram = x.transpose() * x;
  gram.diagonal().array() += ridge;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  if (ldlt_singular(ldlt, gram))
    fail(ErrorCode::singular_system, "X^T X is singular for ridge " + std::to_string(ridge) + "; retry with ridge > 0");
  Eigen::MatrixXd at = ldlt.solve(x.transpose() * y);  // A^T, d x d
  Eigen::MatrixXd a = at.transpose();

  LinearFit fit;
  fit.residual = (y - x * at).squaredNorm();
  fit.map.dim = static_cast<uint32_t>(d);
  fit.map.matrix.resize(d * d);
  for (size_t r = 0; r < d; ++r)
    for (size_t c = 0; c < d; ++c) fit.map.matrix[r * d + c] = static_cast<float>(a(r, c));
  fit.map.source_lang = pairs.source_lang.empty() ? LanguageTag("und") : pairs.source_lang;
  fit.map.target_lang = pairs.target_lang.empty() ? LanguageTag("und") : pairs.target_lang;
  fit.map.ridge = ridge;
  require(fit.map.finite(), ErrorCode::singular_system, "fitted map is not finite");
  return fit;
}

/// Every key replaced by A * key; values, provenance and order are kept and
/// the index is rebuilt with the store's settings.
inline Datastore map_datastore(const Datastore& store, const LinearMap& map) {
  require(store.dim() == map.dim, ErrorCode::dimension_mismatch,
          "map of dimension " + std::to_string(map.dim) + " for store of dimension " + std::to_string(store.dim()));
  return store.transform_keys([&](std::span<const float> key, std::span<float> out) { map.apply(key, out); });
}

}  // namespace knnmt
