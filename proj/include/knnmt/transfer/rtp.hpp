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

// Representational transfer potential: how much a language stands to gain
// from the others, weighting each bilingual-quality difference by how similar
// the two languages' representations are.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "knnmt/decode/corpus.hpp"
#include "knnmt/transfer/similarity.hpp"

namespace knnmt {

enum class ScoreScale { percent, unit };

struct BleuScores {
  double bilingual = 0.0;
  double multilingual = 0.0;
};

/// Per-language bilingual and multilingual quality, on one declared scale.
struct BleuTable {
  ScoreScale scale = ScoreScale::percent;
  std::map<LanguageTag, BleuScores> rows;

  double upper() const noexcept { return scale == ScoreScale::percent ? 100.0 : 1.0; }

  const BleuScores& at(const LanguageTag& l) const {
    auto it = rows.find(l);
    require(it != rows.end(), ErrorCode::incomplete_table, "no scores for language " + l.code());
    return it->second;
  }

  void set(const LanguageTag& l, BleuScores s) {
    for (double v : {s.bilingual, s.multilingual})
      require(v >= 0.0 && v <= upper(), ErrorCode::invalid_argument,
              l.code() + ": score " + std::to_string(v) + " outside the table's scale");
    rows[l] = s;
  }
};

inline ScoreScale parse_scale(const std::string& s) {
  if (s == "percent") return ScoreScale::percent;
  if (s == "unit") return ScoreScale::unit;
  fail(ErrorCode::invalid_argument, "unknown score scale '" + s + "' (expected percent or unit)");
}

inline std::string to_string(ScoreScale s) { return s == ScoreScale::percent ? "percent" : "unit"; }

/// TSV: a `#scale=percent|unit` line, then `lang<TAB>bilingual<TAB>multilingual`
/// rows. A row whose first field is `lang` is a column header and is skipped.
inline BleuTable load_bleu_table(const std::string& path) {
  auto lines = read_lines(path);
  BleuTable table;
  bool have_scale = false;
  for (size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.empty()) continue;
    std::string where = path + ":" + std::to_string(i + 1);
    if (line.rfind("#scale=", 0) == 0) {
      require(!have_scale, ErrorCode::invalid_argument, where + ": scale declared twice");
      table.scale = parse_scale(line.substr(7));
      have_scale = true;
      continue;
    }
    if (line[0] == '#') continue;
    require(have_scale, ErrorCode::invalid_argument, where + ": rows before the #scale= header");
    auto f = split_whitespace(line);
    if (f.size() >= 1 && f[0] == "lang") continue;
    require(f.size() == 3, ErrorCode::invalid_argument, where + ": expected lang, bilingual, multilingual");
    require(LanguageTag::valid(f[0]), ErrorCode::invalid_argument, where + ": bad language tag '" + f[0] + "'");
    LanguageTag lang(f[0]);
    require(!table.rows.count(lang), ErrorCode::invalid_argument, where + ": duplicate row for " + f[0]);
    BleuScores s;
    try {
      size_t used = 0;
      s.bilingual = std::stod(f[1], &used);
      require(used == f[1].size(), ErrorCode::invalid_argument, "trailing characters");
      s.multilingual = std::stod(f[2], &used);
      require(used == f[2].size(), ErrorCode::invalid_argument, "trailing characters");
    } catch (const std::logic_error&) {
      fail(ErrorCode::invalid_argument, where + ": scores are not numbers");
    }
    table.set(lang, s);
  }
  require(have_scale, ErrorCode::invalid_argument, path + ": missing #scale= header");
  return table;
}

inline void save_bleu_table(const BleuTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), ErrorCode::io, "cannot open " + path + " for writing");
  out.precision(17);
  out << "#scale=" << to_string(table.scale) << "\nlang\tbilingual\tmultilingual\n";
  for (const auto& [l, s] : table.rows) out << l.code() << '\t' << s.bilingual << '\t' << s.multilingual << '\n';
  require(out.good(), ErrorCode::io, "failed writing " + path);
}

struct RtpTerm {
  LanguageTag donor;
  double delta_bleu;  // bilingual(donor) - bilingual(l)
  double xsim;
  double contribution;  // delta / max|delta| * xsim
};

/// The donor terms of RTP(l), in language order. Comparison languages exclude
/// l and the pivot; the normaliser is max |delta| over those languages.
inline std::vector<RtpTerm> rtp_terms(const LanguageTag& l, const SimilarityMatrix& sims, const BleuTable& bleu,
                                      std::vector<LanguageTag> languages, const LanguageTag& pivot) {
  std::sort(languages.begin(), languages.end());
  languages.erase(std::unique(languages.begin(), languages.end()), languages.end());
  const double own = bleu.at(l).bilingual;
  std::vector<RtpTerm> terms;
  double norm = 0.0;
  for (const auto& other : languages) {
    if (other == l || other == pivot) continue;
    double delta = bleu.at(other).bilingual - own;
    terms.push_back({other, delta, sims.at(l, other), 0.0});
    norm = std::max(norm, std::abs(delta));
  }
  if (norm > 0.0)
    for (auto& t : terms) t.contribution = t.delta_bleu / norm * t.xsim;
  return terms;
}

inline double rtp(const LanguageTag& l, const SimilarityMatrix& sims, const BleuTable& bleu,
                  const std::vector<LanguageTag>& languages, const LanguageTag& pivot) {
  double total = 0.0;
  for (const auto& t : rtp_terms(l, sims, bleu, languages, pivot)) total += t.contribution;
  return total;
}

}  // namespace knnmt
