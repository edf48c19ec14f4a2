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

#include <array>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "knnmt/decode/corpus.hpp"
#include "knnmt/features/dataset.hpp"

namespace knnmt {

inline constexpr std::array<const char*, 5> kDatasetFeatureNames = {
    "size_ratio", "vocab_occupancy_ratio", "src_subword_overlap", "multi_parallel_overlap", "tgt_ngram_overlap"};
inline constexpr std::array<const char*, 5> kLinguisticFeatureNames = {"geographic", "genetic", "inventory",
                                                                       "syntactic", "phonological"};

using LanguagePair = std::pair<LanguageTag, LanguageTag>;

/// Unordered pair in canonical (smaller, larger) order.
inline LanguagePair canonical_pair(const LanguageTag& a, const LanguageTag& b) {
  return a < b ? LanguagePair{a, b} : LanguagePair{b, a};
}

inline double parse_double(const std::string& field, const std::string& where) {
  try {
    size_t used = 0;
    double v = std::stod(field, &used);
    if (used == field.size()) return v;
  } catch (const std::logic_error&) {
  }
  fail(ErrorCode::invalid_argument, where + ": '" + field + "' is not a number");
}

/// Externally sourced distances, looked up symmetrically.
class LinguisticDistances {
 public:
  using Row = std::array<double, 5>;

  void set(const LanguageTag& a, const LanguageTag& b, const Row& row) {
    for (double v : row)
      require(v >= 0.0 && v <= 1.0, ErrorCode::invalid_argument,
              a.code() + "-" + b.code() + ": distance " + std::to_string(v) + " outside [0, 1]");
    rows_[canonical_pair(a, b)] = row;
  }

  const Row& at(const LanguageTag& a, const LanguageTag& b) const {
    auto it = rows_.find(canonical_pair(a, b));
    require(it != rows_.end(), ErrorCode::incomplete_table, "no linguistic distances for " + a.code() + "-" + b.code());
    return it->second;
  }

  size_t size() const noexcept { return rows_.size(); }

  /// TSV `lang1 lang2 geographic genetic inventory syntactic phonological`; a
  /// first field of `lang1` marks a header row, `#` starts a comment.
  static LinguisticDistances load(const std::string& path) {
    LinguisticDistances d;
    auto lines = read_lines(path);
    for (size_t i = 0; i < lines.size(); ++i) {
      auto f = split_whitespace(lines[i]);
      if (f.empty() || f[0][0] == '#' || f[0] == "lang1") continue;
      std::string where = path + ":" + std::to_string(i + 1);
      require(f.size() == 7, ErrorCode::invalid_argument, where + ": expected 7 fields");
      require(LanguageTag::valid(f[0]) && LanguageTag::valid(f[1]), ErrorCode::invalid_argument,
              where + ": bad language tag");
      Row row;
      for (size_t k = 0; k < 5; ++k) row[k] = parse_double(f[k + 2], where);
      d.set(LanguageTag(f[0]), LanguageTag(f[1]), row);
    }
    return d;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    require(out.good(), ErrorCode::io, "cannot open " + path + " for writing");
    out.precision(17);
    out << "lang1\tlang2";
    for (auto n : kLinguisticFeatureNames) out << '\t' << n;
    out << '\n';
    for (const auto& [p, row] : rows_) {
      out << p.first.code() << '\t' << p.second.code();
      for (double v : row) out << '\t' << v;
      out << '\n';
    }
    require(out.good(), ErrorCode::io, "failed writing " + path);
  }

 private:
  std::map<LanguagePair, Row> rows_;
};

struct FeatureRow {
  LanguageTag lang1, lang2;
  std::vector<double> features;
  double xsim = 0.0;
};

/// Pair-level regression inputs: named feature columns plus the xsim target.
struct FeatureTable {
  std::vector<std::string> names;
  std::vector<FeatureRow> rows;

  size_t n_features() const noexcept { return names.size(); }

  std::vector<LanguageTag> languages() const {
    std::vector<LanguageTag> out;
    for (const auto& r : rows) {
      out.push_back(r.lang1);
      out.push_back(r.lang2);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    require(out.good(), ErrorCode::io, "cannot open " + path + " for writing");
    out.precision(17);
    out << "lang1\tlang2";
    for (const auto& n : names) out << '\t' << n;
    out << "\txsim\n";
    for (const auto& r : rows) {
      out << r.lang1.code() << '\t' << r.lang2.code();
      for (double v : r.features) out << '\t' << v;
      out << '\t' << r.xsim << '\n';
    }
    require(out.good(), ErrorCode::io, "failed writing " + path);
  }

  /// Reads a table written by save(); the header row names the features.
  static FeatureTable load(const std::string& path) {
    auto lines = read_lines(path);
    FeatureTable t;
    bool header = false;
    for (size_t i = 0; i < lines.size(); ++i) {
      auto f = split_whitespace(lines[i]);
      if (f.empty() || f[0][0] == '#') continue;
      std::string where = path + ":" + std::to_string(i + 1);
      if (!header) {
        require(f.size() >= 4 && f[0] == "lang1" && f[1] == "lang2" && f.back() == "xsim", ErrorCode::invalid_argument,
                where + ": expected header lang1, lang2, features..., xsim");
        t.names.assign(f.begin() + 2, f.end() - 1);
        header = true;
        continue;
      }
      require(f.size() == t.names.size() + 3, ErrorCode::invalid_argument,
              where + ": expected " + std::to_string(t.names.size() + 3) + " fields");
      require(LanguageTag::valid(f[0]) && LanguageTag::valid(f[1]), ErrorCode::invalid_argument,
              where + ": bad language tag");
      FeatureRow r{LanguageTag(f[0]), LanguageTag(f[1]), {}, parse_double(f.back(), where)};
      for (size_t k = 2; k + 1 < f.size(); ++k) r.features.push_back(parse_double(f[k], where));
      t.rows.push_back(std::move(r));
    }
    require(header, ErrorCode::invalid_argument, path + ": empty feature table");
    return t;
  }
};

/// Builds the ten-column table (five dataset features, five distances) for
/// the given language pairs. The target n-gram column is min-max scaled over
/// the pairs; xsim is filled from `xsim_of`.
template <class XsimFn>
FeatureTable build_feature_table(const std::map<LanguageTag, Corpus>& corpora,
                                 const std::map<LanguageTag, std::vector<std::vector<TokenId>>>& generated,
                                 const LinguisticDistances& distances, size_t vocab_size,
                                 const std::vector<LanguagePair>& pairs, XsimFn&& xsim_of, size_t n_max = 1) {
  FeatureTable t;
  for (auto n : kDatasetFeatureNames) t.names.emplace_back(n);
  for (auto n : kLinguisticFeatureNames) t.names.emplace_back(n);
  auto get = [](const auto& m, const LanguageTag& l, const char* what) -> const auto& {
    auto it = m.find(l);
    require(it != m.end(), ErrorCode::incomplete_table, std::string("no ") + what + " for " + l.code());
    return it->second;
  };
  std::vector<double> raw_ngram;
  for (const auto& [a, b] : pairs) {
    const Corpus& c1 = get(corpora, a, "corpus");
    const Corpus& c2 = get(corpora, b, "corpus");
    FeatureRow r{a, b, {}, xsim_of(a, b)};
    r.features = {size_ratio(c1, c2), vocab_occupancy_ratio(c1, c2, vocab_size), src_subword_overlap(c1, c2),
                  multi_parallel_overlap(c1, c2), 0.0};
    raw_ngram.push_back(tgt_ngram_overlap(get(generated, a, "translations"), get(generated, b, "translations"), n_max));
    for (double d : distances.at(a, b)) r.features.push_back(d);
    t.rows.push_back(std::move(r));
  }
  auto scaled = minmax_scale(raw_ngram);
  for (size_t i = 0; i < t.rows.size(); ++i) t.rows[i].features[4] = scaled[i];
  return t;
}

}  // namespace knnmt
