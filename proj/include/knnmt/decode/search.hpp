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

// kNN-augmented decoding. Each step mixes the base model's next-token
// distribution with a retrieval distribution built from the k nearest stored
// contexts; greedy and beam search run over the mixed distribution.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "knnmt/align/linear_map.hpp"
#include "knnmt/decode/base_model.hpp"
#include "knnmt/decode/distribution.hpp"
#include "knnmt/decode/toy_model.hpp"
#include "knnmt/vecstore/datastore.hpp"

namespace knnmt {

inline constexpr double kLogFloor = 1e-12;

inline double floored_log(double p) noexcept { return std::log(std::max(p, kLogFloor)); }

/// Everything a decoding step needs besides the source and prefix.
struct KnnDecoder {
  const BaseModel& model;
  const Datastore* store = nullptr;  // no store: plain base-model decoding
  const LinearMap* map = nullptr;    // applied to each query before retrieval
  KnnConfig cfg;

  KnnDecoder(const BaseModel& m, const Datastore* s = nullptr, const LinearMap* lm = nullptr, KnnConfig c = {})
      : model(m), store(s), map(lm), cfg(c) {
    cfg.validate();
    if (store != nullptr) {
      require(store->dim() == model.dim(), ErrorCode::dimension_mismatch,
              "store dimension " + std::to_string(store->dim()) + " differs from featurizer dimension " +
                  std::to_string(model.dim()));
      require(store->vocab_size() <= model.vocab_size(), ErrorCode::dimension_mismatch,
              "store vocabulary exceeds the model vocabulary");
    }
    if (map != nullptr) require(map->dim == model.dim(), ErrorCode::dimension_mismatch, "map dimension differs from featurizer");
  }

  std::vector<float> query_vector(std::span<const TokenId> source, std::span<const TokenId> prefix) const {
    auto q = model.featurize(source, prefix);
    return map != nullptr ? map->apply(q) : q;
  }

  VocabDistribution step(std::span<const TokenId> source, std::span<const TokenId> prefix) const {
    auto base = model.next_distribution(source, prefix);
    if (store == nullptr || store->empty() || cfg.lambda == 0.0) return base;
    auto neighbors = store->query(query_vector(source, prefix), std::min(cfg.k, store->size()));
    if (neighbors.empty()) return base;
    return interpolate(knn_distribution(neighbors, cfg.temperature, model.vocab_size()), base, cfg.lambda);
  }
};

struct BeamHypothesis {
  std::vector<TokenId> tokens;  // without the end-of-sequence marker
  double log_score = 0.0;       // sum of floored log-probabilities, eos step included when finished
  bool finished = false;
};

/// Argmax decoding; ties go to the lower token id.
inline BeamHypothesis greedy_search(const KnnDecoder& dec, std::span<const TokenId> source, size_t max_len) {
  require(max_len >= 1, ErrorCode::invalid_argument, "max_len must be >= 1");
  BeamHypothesis h;
  while (h.tokens.size() < max_len) {
    auto p = dec.step(source, h.tokens);
    TokenId best = 0;
    double best_p = -1.0;
    for (size_t v = 0; v < p.size(); ++v) {
      double pv = std::max(p[v], kLogFloor);
      if (pv > best_p) {
        best_p = pv;
        best = static_cast<TokenId>(v);
      }
    }
    h.log_score += std::log(best_p);
    if (best == kEosId) {
      h.finished = true;
      break;
    }
    h.tokens.push_back(best);
  }
  return h;
}

inline std::vector<TokenId> decode_greedy(const KnnDecoder& dec, std::span<const TokenId> source, size_t max_len) {
  return greedy_search(dec, source, max_len).tokens;
}

namespace detail {

inline bool better(const BeamHypothesis& a, const BeamHypothesis& b) {
  if (a.log_score != b.log_score) return a.log_score > b.log_score;
  return std::lexicographical_compare(a.tokens.begin(), a.tokens.end(), b.tokens.begin(), b.tokens.end());
}

}  // namespace detail

/// Length-unnormalised beam search. Per step the candidates are ranked by
/// score, then by lexicographic token order; end-of-sequence candidates ranked
/// inside the top `beam_size` are finalised and the first `beam_size`
/// remaining candidates stay active. Search ends once `beam_size` hypotheses
/// finished, no active one can still beat the best finished one, or max_len is
/// reached (active hypotheses are then finalised as they are).
inline BeamHypothesis beam_search(const KnnDecoder& dec, std::span<const TokenId> source, size_t beam_size,
                                  size_t max_len) {
  require(beam_size >= 1, ErrorCode::invalid_argument, "beam size must be >= 1");
  require(max_len >= 1, ErrorCode::invalid_argument, "max_len must be >= 1");

  struct Candidate {
    size_t parent;
    TokenId token;
    double score;
  };

  std::vector<BeamHypothesis> active(1), finished;
  bool stopped_early = false;
  for (size_t step = 0; step < max_len && !active.empty(); ++step) {
    std::vector<Candidate> cands;
    cands.reserve(active.size() * dec.model.vocab_size());
    for (size_t h = 0; h < active.size(); ++h) {
      auto p = dec.step(source, active[h].tokens);
      for (size_t v = 0; v < p.size(); ++v)
        cands.push_back({h, static_cast<TokenId>(v), active[h].log_score + floored_log(p[v])});
    }
    // every active hypothesis holds `step` tokens, so lexicographic order of
    // parent + token is parent order, then token order
    auto rank = [&](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      const auto& ta = active[a.parent].tokens;
      const auto& tb = active[b.parent].tokens;
      if (ta != tb) return std::lexicographical_compare(ta.begin(), ta.end(), tb.begin(), tb.end());
      return a.token < b.token;
    };
    // at most beam_size eos candidates can precede beam_size live ones
    size_t keep = std::min(cands.size(), 2 * beam_size);
    std::partial_sort(cands.begin(), cands.begin() + static_cast<ptrdiff_t>(keep), cands.end(), rank);

    std::vector<BeamHypothesis> next;
    for (size_t r = 0; r < keep && next.size() < beam_size; ++r) {
      const auto& c = cands[r];
      BeamHypothesis h{active[c.parent].tokens, c.score, false};
      if (c.token == kEosId) {
        if (r < beam_size) {
          h.finished = true;
          finished.push_back(std::move(h));
        }
        continue;
      }
      h.tokens.push_back(c.token);
      next.push_back(std::move(h));
    }
    active = std::move(next);

    if (finished.size() >= beam_size) {
      stopped_early = true;
      break;
    }
    if (!finished.empty() && !active.empty()) {
      double best_done = finished.front().log_score;
      for (const auto& f : finished) best_done = std::max(best_done, f.log_score);
      double best_live = active.front().log_score;
      for (const auto& a : active) best_live = std::max(best_live, a.log_score);
      // log-probabilities are <= 0, so live scores can only fall
      if (best_done >= best_live) {
        stopped_early = true;
        break;
      }
    }
  }
  if (!stopped_early)
    for (auto& h : active) finished.push_back(std::move(h));

  require(!finished.empty(), ErrorCode::internal, "beam search produced no hypothesis");
  return *std::min_element(finished.begin(), finished.end(),
                           [](const BeamHypothesis& a, const BeamHypothesis& b) { return detail::better(a, b); });
}

inline std::vector<TokenId> decode_beam(const KnnDecoder& dec, std::span<const TokenId> source, size_t beam_size,
                                        size_t max_len) {
  return beam_search(dec, source, beam_size, max_len).tokens;
}

/// Teacher-forced context dump for one language: for every target position t
/// of every sentence (the end-of-sequence position included) one record with
/// key featurize(source, target[0..t)) and value target[t].
inline std::vector<ReprRecord> collect_contexts(const BaseModel& model, std::span<const SentencePair> corpus,
                                                const LanguageTag& lang) {
  std::vector<ReprRecord> out;
  for (size_t s = 0; s < corpus.size(); ++s) {
    const auto& pair = corpus[s];
    std::span<const TokenId> target(pair.target);
    for (size_t t = 0; t <= target.size(); ++t) {
      ReprRecord r;
      r.vector = model.featurize(pair.source, target.first(t));
      r.token_id = t < target.size() ? target[t] : kEosId;
      r.sentence_id = static_cast<uint32_t>(s);
      r.timestep = static_cast<uint32_t>(t);
      r.lang = lang;
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace knnmt
