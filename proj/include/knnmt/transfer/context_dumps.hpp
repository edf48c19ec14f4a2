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
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "knnmt/error.hpp"
#include "knnmt/language.hpp"
#include "knnmt/vecstore/dump.hpp"

namespace knnmt {

/// Context vectors of several source languages translated into one target.
/// Within a language, (sentence_id, timestep) is unique; across languages an
/// equal sentence_id denotes the same target sentence.
class ContextDumpSet {
 public:
  using Timesteps = std::vector<std::pair<uint32_t, size_t>>;  // (timestep, row), sorted by timestep

  ContextDumpSet(uint32_t dim, LanguageTag target) : dim_(dim), target_(std::move(target)) {
    require(dim > 0, ErrorCode::invalid_argument, "context dimension must be positive");
  }

  uint32_t dim() const noexcept { return dim_; }
  const LanguageTag& target() const noexcept { return target_; }

  void add(const LanguageTag& lang, uint32_t sentence_id, uint32_t timestep, std::span<const float> v) {
    require(v.size() == dim_, ErrorCode::dimension_mismatch,
            "context of length " + std::to_string(v.size()) + " in a d=" + std::to_string(dim_) + " set");
    auto& l = langs_[lang];
    auto& steps = l.sentences[sentence_id];
    auto at = std::lower_bound(steps.begin(), steps.end(), std::make_pair(timestep, size_t{0}));
    require(at == steps.end() || at->first != timestep, ErrorCode::invalid_argument,
            lang.code() + ": duplicate context for sentence " + std::to_string(sentence_id) + " timestep " +
                std::to_string(timestep));
    steps.insert(at, {timestep, l.vectors.size() / dim_});
    l.vectors.insert(l.vectors.end(), v.begin(), v.end());
  }

  /// Adds every record of an RDMP1 dump under the dump's language.
  void add_dump(const Dump& dump) {
    require(dump.header.dim == dim_, ErrorCode::dimension_mismatch,
            dump.header.lang.code() + " dump has d=" + std::to_string(dump.header.dim) + ", expected " +
                std::to_string(dim_));
    require(!langs_.count(dump.header.lang), ErrorCode::invalid_argument,
            "language " + dump.header.lang.code() + " loaded twice");
    for (const auto& r : dump.records) add(dump.header.lang, r.sentence_id, r.timestep, r.vector);
  }

  static ContextDumpSet from_files(const std::vector<std::string>& paths, LanguageTag target) {
    require(!paths.empty(), ErrorCode::empty_input, "no context dumps given");
    auto first = read_dump(paths.front());
    ContextDumpSet set(first.header.dim, std::move(target));
    set.add_dump(first);
    for (size_t i = 1; i < paths.size(); ++i) set.add_dump(read_dump(paths[i]));
    return set;
  }

  bool contains(const LanguageTag& lang) const { return langs_.count(lang) != 0; }

  std::vector<LanguageTag> languages() const {
    std::vector<LanguageTag> out;
    for (const auto& [l, _] : langs_) out.push_back(l);
    return out;
  }

  /// Sentence id -> timesteps, ordered by sentence id.
  const std::map<uint32_t, Timesteps>& sentences(const LanguageTag& lang) const { return get(lang).sentences; }

  std::span<const float> row(const LanguageTag& lang, size_t r) const {
    const auto& v = get(lang).vectors;
    return std::span<const float>(v).subspan(r * dim_, dim_);
  }

  /// Applies f to every stored vector of one language in place.
  template <class F>
  void transform(const LanguageTag& lang, F&& f) {
    auto& v = langs_.at(lang).vectors;
    for (size_t r = 0; r * dim_ < v.size(); ++r) f(std::span<float>(v).subspan(r * dim_, dim_));
  }

 private:
  struct PerLanguage {
    std::map<uint32_t, Timesteps> sentences;
    std::vector<float> vectors;
  };

  const PerLanguage& get(const LanguageTag& lang) const {
    auto it = langs_.find(lang);
    require(it != langs_.end(), ErrorCode::invalid_argument, "no contexts for language " + lang.code());
    return it->second;
  }

  uint32_t dim_;
  LanguageTag target_;
  std::map<LanguageTag, PerLanguage> langs_;
};

}  // namespace knnmt
