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

// Corpus BLEU over caller-tokenised sentences, single reference, N = 4 with
// uniform weights. Clipped n-gram matches and n-gram totals are summed over
// the corpus before any division.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "knnmt/error.hpp"
#include "knnmt/transfer/rtp.hpp"

namespace knnmt {

inline constexpr size_t kBleuOrder = 4;

enum class Smoothing { none, exp };

inline Smoothing parse_smoothing(const std::string& s) {
  if (s == "none") return Smoothing::none;
  if (s == "exp") return Smoothing::exp;
  fail(ErrorCode::invalid_argument, "unknown smoothing '" + s + "' (expected none or exp)");
}

struct BleuScore {
  double score = 0.0;
  std::array<double, kBleuOrder> precisions{};
  std::array<uint64_t, kBleuOrder> matches{};
  std::array<uint64_t, kBleuOrder> totals{};
  double brevity_penalty = 0.0;
  uint64_t hyp_len = 0;
  uint64_t ref_len = 0;
  ScoreScale scale = ScoreScale::unit;

  /// Same score on the 0-100 scale.
  BleuScore as_percent() const {
    BleuScore s = *this;
    if (scale == ScoreScale::unit) {
      s.score *= 100.0;
      s.scale = ScoreScale::percent;
    }
    return s;
  }
};

/// Sufficient statistics of corpus BLEU; additive over sentences.
struct BleuStats {
  std::array<uint64_t, kBleuOrder> matches{};
  std::array<uint64_t, kBleuOrder> totals{};
  uint64_t hyp_len = 0;
  uint64_t ref_len = 0;

  BleuStats& operator+=(const BleuStats& o) {
    for (size_t n = 0; n < kBleuOrder; ++n) {
      matches[n] += o.matches[n];
      totals[n] += o.totals[n];
    }
    hyp_len += o.hyp_len;
    ref_len += o.ref_len;
    return *this;
  }
};

template <class Token>
BleuStats sentence_stats(std::span<const Token> hyp, std::span<const Token> ref) {
  require(!ref.empty(), ErrorCode::undefined_reference, "empty reference sentence");
  BleuStats s;
  s.hyp_len = hyp.size();
  s.ref_len = ref.size();
  for (size_t n = 1; n <= kBleuOrder; ++n) {
    std::map<std::vector<Token>, uint64_t> ref_counts, hyp_counts;
    for (size_t i = 0; i + n <= ref.size(); ++i) ++ref_counts[std::vector<Token>(ref.begin() + i, ref.begin() + i + n)];
    for (size_t i = 0; i + n <= hyp.size(); ++i) ++hyp_counts[std::vector<Token>(hyp.begin() + i, hyp.begin() + i + n)];
    for (const auto& [gram, c] : hyp_counts) {
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) s.matches[n - 1] += std::min(c, it->second);
      s.totals[n - 1] += c;
    }
  }
  return s;
}

/// BP = 1 if hyp_len > ref_len, else exp(1 - ref_len / hyp_len); 0 for an empty hypothesis side.
inline double brevity_penalty(uint64_t hyp_len, uint64_t ref_len) {
  if (hyp_len > ref_len) return 1.0;
  if (hyp_len == 0) return 0.0;
  return std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
}

/// Score from accumulated statistics. Exponential smoothing replaces the k-th
/// zero-match order (k = 1, 2, ...) by 1 / (2^k * total_n). An order with no
/// hypothesis n-grams at all has precision 0.
inline BleuScore bleu_from_stats(const BleuStats& s, Smoothing smoothing) {
  BleuScore out;
  out.matches = s.matches;
  out.totals = s.totals;
  out.hyp_len = s.hyp_len;
  out.ref_len = s.ref_len;
  out.brevity_penalty = brevity_penalty(s.hyp_len, s.ref_len);
  double smooth = 1.0;
  bool all_positive = true;
  double log_sum = 0.0;
  for (size_t n = 0; n < kBleuOrder; ++n) {
    double p = 0.0;
    if (s.totals[n] > 0) {
      if (s.matches[n] > 0) {
        p = static_cast<double>(s.matches[n]) / static_cast<double>(s.totals[n]);
      } else if (smoothing == Smoothing::exp) {
        smooth *= 2.0;
        p = 1.0 / (smooth * static_cast<double>(s.totals[n]));
      }
    }
    out.precisions[n] = p;
    if (p > 0.0) log_sum += std::log(p) / static_cast<double>(kBleuOrder);
    else all_positive = false;
  }
  out.score = all_positive ? out.brevity_penalty * std::exp(log_sum) : 0.0;
  return out;
}

/// Corpus BLEU on the unit scale.
template <class Token>
BleuScore bleu(std::span<const std::vector<Token>> hypotheses, std::span<const std::vector<Token>> references,
               Smoothing smoothing = Smoothing::exp) {
  require(!hypotheses.empty(), ErrorCode::empty_input, "no hypotheses to score");
  require(hypotheses.size() == references.size(), ErrorCode::misaligned_corpora,
          std::to_string(hypotheses.size()) + " hypotheses vs " + std::to_string(references.size()) + " references");
  BleuStats total;
  for (size_t i = 0; i < hypotheses.size(); ++i)
    total += sentence_stats<Token>(hypotheses[i], references[i]);
  return bleu_from_stats(total, smoothing);
}

template <class Token>
BleuScore bleu(const std::vector<std::vector<Token>>& hypotheses, const std::vector<std::vector<Token>>& references,
               Smoothing smoothing = Smoothing::exp) {
  return bleu<Token>(std::span<const std::vector<Token>>(hypotheses), std::span<const std::vector<Token>>(references),
                     smoothing);
}

/// a - b on their shared scale.
inline double delta_bleu(const BleuScore& a, const BleuScore& b) {
  require(a.scale == b.scale, ErrorCode::scale_mismatch, "BLEU scores on different scales");
  return a.score - b.score;
}

}  // namespace knnmt
