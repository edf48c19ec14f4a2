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
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "knnmt/error.hpp"
#include "knnmt/vecstore/dump.hpp"
#include "knnmt/vecstore/index.hpp"
#include "knnmt/vecstore/record.hpp"

namespace knnmt {

struct LanguageCount {
  LanguageTag lang;
  uint64_t count = 0;
};

/// Immutable key/value store of context vectors. Keys are f32 rows, values
/// are target token ids; every entry remembers its source language, sentence
/// and timestep. Safe for concurrent queries once built.
class Datastore {
 public:
  Datastore() = default;

  uint32_t dim() const noexcept { return dim_; }
  uint32_t vocab_size() const noexcept { return vocab_size_; }
  size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }

  std::span<const float> keys() const noexcept { return keys_; }
  std::span<const float> key(size_t i) const noexcept {
    return std::span<const float>(keys_).subspan(i * dim_, dim_);
  }
  TokenId token(size_t i) const noexcept { return tokens_[i]; }
  uint32_t sentence_id(size_t i) const noexcept { return sentence_ids_[i]; }
  uint32_t timestep(size_t i) const noexcept { return timesteps_[i]; }
  const LanguageTag& lang(size_t i) const noexcept { return languages_[lang_index_[i]].lang; }
  uint16_t lang_index(size_t i) const noexcept { return lang_index_[i]; }

  /// Languages in order of first appearance with their entry counts.
  std::span<const LanguageCount> languages() const noexcept { return languages_; }

  uint64_t count(const LanguageTag& lang) const noexcept {
    for (const auto& lc : languages_)
      if (lc.lang == lang) return lc.count;
    return 0;
  }

  ReprRecord record(size_t i) const {
    auto k = key(i);
    return ReprRecord{{k.begin(), k.end()}, tokens_[i], sentence_ids_[i], timesteps_[i], lang(i)};
  }

  const IndexSpec& index_spec() const noexcept { return spec_; }
  const CellProbeIndex& cell_index() const noexcept { return cells_; }

  /// k nearest entries by squared L2, ascending; equal distances resolve to the
  /// lower entry index.
  std::vector<Neighbor> query(std::span<const float> q, size_t k) const {
    return query(q, k, spec_.n_probe);
  }

  std::vector<Neighbor> query(std::span<const float> q, size_t k, uint32_t n_probe) const {
    require(q.size() == dim_, ErrorCode::dimension_mismatch,
            "query of dimension " + std::to_string(q.size()) + " against store of dimension " +
                std::to_string(dim_));
    require(k >= 1, ErrorCode::invalid_argument, "k must be positive");
    require(k <= size(), ErrorCode::insufficient_entries,
            "k=" + std::to_string(k) + " exceeds " + std::to_string(size()) + " stored entries");
    std::vector<Candidate> found = spec_.kind == IndexKind::cell_probe ? cells_.search(keys_, q, k, n_probe)
                                                                       : exact_scan(keys_, dim_, q, k);
    std::vector<Neighbor> out;
    out.reserve(found.size());
    for (const auto& c : found) out.push_back(Neighbor{c.index, c.distance, tokens_[c.index], lang(c.index)});
    return out;
  }

  /// Same store with a different search structure over identical entries.
  Datastore with_index(const IndexSpec& spec) const {
    Datastore copy = *this;
    copy.spec_ = spec;
    copy.build_index();
    return copy;
  }

  /// Same entries and provenance with every key replaced by f(key).
  template <class F>
  Datastore transform_keys(F&& f) const {
    Datastore copy = *this;
    std::vector<float> out(dim_);
    for (size_t i = 0; i < size(); ++i) {
      f(key(i), std::span<float>(out));
      std::copy(out.begin(), out.end(), copy.keys_.begin() + static_cast<ptrdiff_t>(i * dim_));
    }
    copy.build_index();
    return copy;
  }

  friend class DatastoreBuilder;
  friend Datastore merge_datastores(std::span<const Datastore>, std::optional<IndexSpec>);
  friend struct DatastoreFile;

 private:
  void build_index() {
    if (spec_.kind == IndexKind::cell_probe) {
      cells_ = CellProbeIndex::train(keys_, dim_, spec_);
    } else {
      cells_ = CellProbeIndex();
    }
  }

  uint16_t intern(const LanguageTag& lang) {
    for (size_t i = 0; i < languages_.size(); ++i) {
      if (languages_[i].lang == lang) {
        ++languages_[i].count;
        return static_cast<uint16_t>(i);
      }
    }
    require(languages_.size() < UINT16_MAX, ErrorCode::invalid_argument, "too many languages in one store");
    languages_.push_back({lang, 1});
    return static_cast<uint16_t>(languages_.size() - 1);
  }

  uint32_t dim_ = 0;
  uint32_t vocab_size_ = 0;
  std::vector<float> keys_;
  std::vector<TokenId> tokens_;
  std::vector<uint32_t> sentence_ids_;
  std::vector<uint32_t> timesteps_;
  std::vector<uint16_t> lang_index_;
  std::vector<LanguageCount> languages_;
  IndexSpec spec_;
  CellProbeIndex cells_;
};

/// Accumulates records in input order, then builds the search index once.
class DatastoreBuilder {
 public:
  DatastoreBuilder(uint32_t dim, uint32_t vocab_size) {
    require(dim > 0, ErrorCode::invalid_argument, "datastore dimension must be positive");
    store_.dim_ = dim;
    store_.vocab_size_ = vocab_size;
  }

  void add(std::span<const float> key, TokenId token, uint32_t sentence_id, uint32_t timestep,
           const LanguageTag& lang) {
    if (key.size() != store_.dim_)
      fail(ErrorCode::malformed_dump, "record of length " + std::to_string(key.size()) +
                                          " in a d=" + std::to_string(store_.dim_) + " stream");
    require(token < store_.vocab_size_, ErrorCode::malformed_dump, "token id outside vocabulary");
    require(timestep <= UINT16_MAX, ErrorCode::malformed_dump, "timestep does not fit the u16 field");
    store_.keys_.insert(store_.keys_.end(), key.begin(), key.end());
    store_.tokens_.push_back(token);
    store_.sentence_ids_.push_back(sentence_id);
    store_.timesteps_.push_back(timestep);
    store_.lang_index_.push_back(store_.intern(lang));
  }

  void add(const ReprRecord& rec) { add(rec.vector, rec.token_id, rec.sentence_id, rec.timestep, rec.lang); }

  size_t size() const noexcept { return store_.size(); }

  Datastore finish(const IndexSpec& spec) && {
    require(!store_.empty(), ErrorCode::empty_datastore, "no records to build a datastore from");
    store_.spec_ = spec;
    store_.build_index();
    return std::move(store_);
  }

 private:
  Datastore store_;
};

inline Datastore build_datastore(std::span<const ReprRecord> records, uint32_t dim, uint32_t vocab_size,
                                 const IndexSpec& spec = {}) {
  DatastoreBuilder builder(dim, vocab_size);
  for (const auto& rec : records) builder.add(rec);
  return std::move(builder).finish(spec);
}

inline Datastore build_datastore(DumpReader& reader, const IndexSpec& spec = {}) {
  const auto& header = reader.header();
  DatastoreBuilder builder(header.dim, header.vocab_size);
  ReprRecord rec;
  while (reader.next(rec)) builder.add(rec);
  return std::move(builder).finish(spec);
}

/// Union of stores in argument order. Duplicate (key, token) pairs coming from
/// different inputs are kept. The index follows `spec`, or the first input's
/// index settings when absent.
inline Datastore merge_datastores(std::span<const Datastore> stores, std::optional<IndexSpec> spec = std::nullopt) {
  require(!stores.empty(), ErrorCode::empty_input, "nothing to merge");
  const uint32_t dim = stores.front().dim();
  uint32_t vocab = 0;
  for (const auto& s : stores) {
    require(s.dim() == dim, ErrorCode::incompatible_stores,
            "cannot merge stores of dimension " + std::to_string(dim) + " and " + std::to_string(s.dim()));
    vocab = std::max(vocab, s.vocab_size());
  }
  Datastore merged;
  merged.dim_ = dim;
  merged.vocab_size_ = vocab;
  size_t total = 0;
  for (const auto& s : stores) total += s.size();
  require(total > 0, ErrorCode::empty_datastore, "merge of empty stores");
  merged.keys_.reserve(total * dim);
  merged.tokens_.reserve(total);
  for (const auto& s : stores) {
    std::vector<uint16_t> remap(s.languages_.size());
    for (size_t l = 0; l < s.languages_.size(); ++l) {
      auto it = std::find_if(merged.languages_.begin(), merged.languages_.end(),
                             [&](const LanguageCount& lc) { return lc.lang == s.languages_[l].lang; });
      if (it == merged.languages_.end()) {
        merged.languages_.push_back({s.languages_[l].lang, 0});
        it = merged.languages_.end() - 1;
      }
      it->count += s.languages_[l].count;
      remap[l] = static_cast<uint16_t>(it - merged.languages_.begin());
    }
    merged.keys_.insert(merged.keys_.end(), s.keys_.begin(), s.keys_.end());
    merged.tokens_.insert(merged.tokens_.end(), s.tokens_.begin(), s.tokens_.end());
    merged.sentence_ids_.insert(merged.sentence_ids_.end(), s.sentence_ids_.begin(), s.sentence_ids_.end());
    merged.timesteps_.insert(merged.timesteps_.end(), s.timesteps_.begin(), s.timesteps_.end());
    for (uint16_t li : s.lang_index_) merged.lang_index_.push_back(remap[li]);
  }
  merged.spec_ = spec.value_or(stores.front().index_spec());
  merged.build_index();
  return merged;
}

struct ProvenanceQuery {
  std::vector<float> vector;
  size_t k = 1;
};

struct LanguageProvenance {
  LanguageTag lang;
  uint64_t retrieved = 0;
  uint64_t stored = 0;
  double p_obs = 0.0;  // share of all retrieved neighbors
  double p_uni = 0.0;  // share of stored entries
  double ratio = 0.0;  // p_obs / p_uni
};

/// Observed versus size-proportional retrieval share for every language in
/// the store, in the store's language order.
inline std::vector<LanguageProvenance> provenance_stats(const Datastore& store,
                                                        std::span<const ProvenanceQuery> queries) {
  require(!store.empty(), ErrorCode::empty_datastore, "provenance of an empty store");
  require(!queries.empty(), ErrorCode::empty_input, "provenance needs at least one query");
  auto langs = store.languages();
  std::vector<uint64_t> hits(langs.size(), 0);
  uint64_t retrieved = 0;
  for (const auto& q : queries) {
    for (const auto& n : store.query(q.vector, q.k)) {
      ++hits[store.lang_index(n.entry_index)];
      ++retrieved;
    }
  }
  std::vector<LanguageProvenance> out;
  out.reserve(langs.size());
  for (size_t l = 0; l < langs.size(); ++l) {
    LanguageProvenance p;
    p.lang = langs[l].lang;
    p.retrieved = hits[l];
    p.stored = langs[l].count;
    p.p_obs = static_cast<double>(hits[l]) / static_cast<double>(retrieved);
    p.p_uni = static_cast<double>(langs[l].count) / static_cast<double>(store.size());
    p.ratio = p.p_obs / p.p_uni;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace knnmt
