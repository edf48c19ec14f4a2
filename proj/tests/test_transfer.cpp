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

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <map>

#include "knnmt/transfer.hpp"
#include "test_support.hpp"

namespace knnmt {
namespace {

using testing::random_vector;
using testing::TempDir;

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::internal;
}

const LanguageTag kDe("de"), kNl("nl"), kRu("ru"), kEn("en");

// Naive reference: nested maps, explicit per-sentence averaging.
using Contexts = std::map<uint32_t, std::map<uint32_t, std::vector<float>>>;

double naive_xsim(const Contexts& a, const Contexts& b) {
  double total = 0;
  int sentences = 0;
  for (const auto& [sid, steps] : a) {
    auto other = b.find(sid);
    if (other == b.end()) continue;
    double sum = 0;
    int n = 0;
    for (const auto& [t, v] : steps) {
      auto w = other->second.find(t);
      if (w == other->second.end()) continue;
      double dot = 0, na = 0, nb = 0;
      for (size_t i = 0; i < v.size(); ++i) {
        dot += double(v[i]) * w->second[i];
        na += double(v[i]) * v[i];
        nb += double(w->second[i]) * w->second[i];
      }
      sum += (na == 0 || nb == 0) ? 0.0 : dot / std::sqrt(na * nb);
      ++n;
    }
    if (n == 0) continue;
    total += sum / n;
    ++sentences;
  }
  return total / sentences;
}

Contexts random_contexts(Rng& rng, size_t sentences, size_t dim, double keep = 1.0) {
  Contexts c;
  for (uint32_t s = 0; s < sentences; ++s) {
    if (rng.uniform() > keep) continue;
    uint32_t len = 1 + static_cast<uint32_t>(rng.below(9));
    for (uint32_t t = 0; t < len; ++t)
      if (rng.uniform() <= keep) c[s][t] = random_vector(rng, dim);
  }
  return c;
}

void load(ContextDumpSet& set, const LanguageTag& l, const Contexts& c) {
  for (const auto& [sid, steps] : c)
    for (const auto& [t, v] : steps) set.add(l, sid, t, v);
}

// ---- xsim

TEST(Xsim, IdenticalDumpsGiveOne) {
  Rng rng(1);
  auto c = random_contexts(rng, 40, 16);
  ContextDumpSet set(16, kEn);
  load(set, kDe, c);
  load(set, kNl, c);
  EXPECT_NEAR(xsim(set, kDe, kNl), 1.0, 1e-9);
  EXPECT_NEAR(xsim(set, kDe, kDe), 1.0, 1e-9);
}

TEST(Xsim, OrthogonalContextsGiveZero) {
  ContextDumpSet set(4, kEn);
  for (uint32_t s = 0; s < 3; ++s)
    for (uint32_t t = 0; t < 4; ++t) {
      set.add(kDe, s, t, std::vector<float>{1.5f, 0, 0, 0});
      set.add(kNl, s, t, std::vector<float>{0, -2, 0, 0.f});
    }
  EXPECT_EQ(xsim(set, kDe, kNl), 0.0);
}

TEST(Xsim, HandAverageOverTimesteps) {
  ContextDumpSet set(2, kEn);
  set.add(kDe, 0, 0, std::vector<float>{1, 0});
  set.add(kDe, 0, 1, std::vector<float>{1, 0});
  set.add(kNl, 0, 0, std::vector<float>{3, 0});
  set.add(kNl, 0, 1, std::vector<float>{0, 1});
  EXPECT_EQ(xsim(set, kDe, kNl), 0.5);
  // literal 1/t weighting: 1/1 * 1 + 1/2 * 0
  EXPECT_EQ(xsim(set, kDe, kNl, {TimestepWeighting::inverse_step}), 1.0);
}

TEST(Xsim, MatchesNaiveOracleWithPartialOverlap) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    auto a = random_contexts(rng, 30, 8, 0.8), b = random_contexts(rng, 30, 8, 0.8);
    ContextDumpSet set(8, kEn);
    load(set, kDe, a);
    load(set, kRu, b);
    EXPECT_NEAR(xsim(set, kDe, kRu), naive_xsim(a, b), 1e-12);
  }
}

TEST(Xsim, SymmetricExactly) {
  Rng rng(3);
  ContextDumpSet set(32, kEn);
  load(set, kDe, random_contexts(rng, 50, 32));
  load(set, kRu, random_contexts(rng, 50, 32));
  EXPECT_EQ(xsim(set, kDe, kRu), xsim(set, kRu, kDe));
}

TEST(Xsim, ScaleInvariance) {
  Rng rng(4);
  auto a = random_contexts(rng, 30, 16), b = random_contexts(rng, 30, 16);
  ContextDumpSet set(16, kEn);
  load(set, kDe, a);
  load(set, kRu, b);
  const double base = xsim(set, kDe, kRu);
  // power-of-two factors scale floats without rounding
  for (float c : {2.0f, 0.25f, 1024.0f}) {
    ContextDumpSet scaled(16, kEn);
    load(scaled, kDe, a);
    load(scaled, kRu, b);
    scaled.transform(kDe, [&](std::span<float> v) {
      for (auto& x : v) x *= c;
    });
    EXPECT_EQ(xsim(scaled, kDe, kRu), base);
  }
  // other factors round each component once
  ContextDumpSet scaled(16, kEn);
  load(scaled, kDe, a);
  load(scaled, kRu, b);
  scaled.transform(kRu, [](std::span<float> v) {
    for (auto& x : v) x *= 3.7f;
  });
  EXPECT_NEAR(xsim(scaled, kDe, kRu), base, 1e-6);
}

TEST(Xsim, ZeroVectorCountsAsZeroCosine) {
  ContextDumpSet set(2, kEn);
  set.add(kDe, 0, 0, std::vector<float>{0, 0});
  set.add(kDe, 0, 1, std::vector<float>{1, 1});
  set.add(kNl, 0, 0, std::vector<float>{1, 0});
  set.add(kNl, 0, 1, std::vector<float>{2, 2});
  EXPECT_NEAR(xsim(set, kDe, kNl), 0.5, 1e-15);
}

TEST(Xsim, NoSharedSentencesIsAnError) {
  ContextDumpSet set(2, kEn);
  set.add(kDe, 0, 0, std::vector<float>{1, 0});
  set.add(kNl, 1, 0, std::vector<float>{1, 0});
  set.add(kRu, 0, 5, std::vector<float>{1, 0});
  EXPECT_EQ(code_of([&] { xsim(set, kDe, kNl); }), ErrorCode::no_overlap);
  EXPECT_EQ(code_of([&] { xsim(set, kDe, kRu); }), ErrorCode::no_overlap);
  EXPECT_EQ(code_of([&] { xsim(set, kDe, LanguageTag("fr")); }), ErrorCode::invalid_argument);
}

TEST(ContextDumps, DuplicatesAndDimensions) {
  ContextDumpSet set(2, kEn);
  set.add(kDe, 0, 0, std::vector<float>{1, 0});
  EXPECT_EQ(code_of([&] { set.add(kDe, 0, 0, std::vector<float>{0, 1}); }), ErrorCode::invalid_argument);
  EXPECT_EQ(code_of([&] { set.add(kDe, 0, 1, std::vector<float>{0, 1, 2}); }), ErrorCode::dimension_mismatch);
}

TEST(ContextDumps, LoadsDumpFiles) {
  TempDir dir;
  Rng rng(5);
  auto de = testing::random_records(rng, 64, 8, 20, kDe);
  auto nl = de;
  for (auto& r : nl) r.lang = kNl;
  write_dump(dir.file("de.rdmp"), 8, 20, kDe, de);
  write_dump(dir.file("nl.rdmp"), 8, 20, kNl, nl);
  auto set = ContextDumpSet::from_files({dir.file("de.rdmp"), dir.file("nl.rdmp")}, kEn);
  EXPECT_EQ(set.languages(), (std::vector<LanguageTag>{kDe, kNl}));
  EXPECT_NEAR(xsim(set, kDe, kNl), 1.0, 1e-9);
  write_dump(dir.file("ru.rdmp"), 4, 20, kRu, {});
  EXPECT_EQ(code_of([&] { ContextDumpSet::from_files({dir.file("de.rdmp"), dir.file("ru.rdmp")}, kEn); }),
            ErrorCode::dimension_mismatch);
  EXPECT_EQ(code_of([&] { ContextDumpSet::from_files({dir.file("de.rdmp"), dir.file("de.rdmp")}, kEn); }),
            ErrorCode::invalid_argument);
}

TEST(SimilarityMatrix, SymmetricWithUnitDiagonal) {
  Rng rng(6);
  ContextDumpSet set(8, kEn);
  for (const auto& l : {kDe, kNl, kRu}) load(set, l, random_contexts(rng, 20, 8));
  auto m = similarity_matrix(set, {kDe, kNl, kRu});
  for (const auto& a : {kDe, kNl, kRu}) {
    EXPECT_EQ(m.at(a, a), 1.0);
    for (const auto& b : {kDe, kNl, kRu}) {
      EXPECT_EQ(m.at(a, b), m.at(b, a));
      EXPECT_LE(std::abs(m.at(a, b)), 1.0);
    }
  }
  EXPECT_EQ(m.at(kDe, kRu), xsim(set, kDe, kRu));
  EXPECT_EQ(code_of([&] { m.at(kDe, kEn); }), ErrorCode::incomplete_table);
}

// ---- RTP

BleuTable table(std::initializer_list<std::pair<const char*, double>> bilingual) {
  BleuTable t;
  for (const auto& [l, b] : bilingual) t.set(LanguageTag(l), {b, b});
  return t;
}

SimilarityMatrix sims(const std::vector<LanguageTag>& langs, double value) {
  SimilarityMatrix m(langs);
  for (size_t i = 0; i < langs.size(); ++i)
    for (size_t j = i + 1; j < langs.size(); ++j) m.set(langs[i], langs[j], value);
  return m;
}

TEST(Rtp, ZeroDeltasGiveZero) {
  std::vector<LanguageTag> langs = {kDe, kNl, kRu, kEn};
  auto t = table({{"de", 20}, {"nl", 20}, {"ru", 20}, {"en", 35}});
  EXPECT_EQ(rtp(kDe, sims(langs, 0.7), t, langs, kEn), 0.0);
}

TEST(Rtp, SingleDonorEqualsXsim) {
  std::vector<LanguageTag> langs = {kDe, kNl, kEn};
  auto m = sims(langs, 0.0);
  m.set(kDe, kNl, 0.63);
  auto t = table({{"de", 12}, {"nl", 30}, {"en", 40}});
  EXPECT_EQ(rtp(kDe, m, t, langs, kEn), 0.63);
}

TEST(Rtp, HandComputedMixture) {
  // deltas +10 and -5, normaliser 10: 1 * 0.5 + (-0.5) * 0.8 = 0.1
  std::vector<LanguageTag> langs = {kDe, kNl, kRu, kEn};
  SimilarityMatrix m(langs);
  m.set(kDe, kNl, 0.5);
  m.set(kDe, kRu, 0.8);
  auto t = table({{"de", 10}, {"nl", 20}, {"ru", 5}, {"en", 90}});
  EXPECT_NEAR(rtp(kDe, m, t, langs, kEn), 0.1, 1e-15);
  auto terms = rtp_terms(kDe, m, t, langs, kEn);
  ASSERT_EQ(terms.size(), 2u);
  EXPECT_EQ(terms[0].donor, kNl);
  EXPECT_EQ(terms[0].delta_bleu, 10.0);
}

TEST(Rtp, OrderOfComparisonLanguagesIsIrrelevant) {
  Rng rng(7);
  std::vector<LanguageTag> langs;
  for (const char* c : {"aa", "bb", "cc", "dd", "ee", "ff", "en"}) langs.emplace_back(c);
  SimilarityMatrix m(langs);
  BleuTable t;
  for (size_t i = 0; i < langs.size(); ++i) {
    t.set(langs[i], {rng.uniform(0, 50), 0});
    for (size_t j = i + 1; j < langs.size(); ++j) m.set(langs[i], langs[j], rng.uniform(-1, 1));
  }
  double base = rtp(langs[0], m, t, langs, kEn);
  for (int i = 0; i < 10; ++i) {
    auto shuffled = langs;
    rng.shuffle(std::span<LanguageTag>(shuffled));
    EXPECT_EQ(rtp(langs[0], m, t, shuffled, kEn), base);
  }
}

TEST(Rtp, SignFollowsDonorQuality) {
  std::vector<LanguageTag> langs = {kDe, kNl, kRu, kEn};
  auto m = sims(langs, 0.4);
  EXPECT_GT(rtp(kDe, m, table({{"de", 5}, {"nl", 25}, {"ru", 15}, {"en", 0}}), langs, kEn), 0.0);
  EXPECT_LT(rtp(kDe, m, table({{"de", 30}, {"nl", 25}, {"ru", 15}, {"en", 0}}), langs, kEn), 0.0);
}

TEST(Rtp, MissingScoresAreIncomplete) {
  std::vector<LanguageTag> langs = {kDe, kNl, kRu, kEn};
  auto m = sims(langs, 0.4);
  auto t = table({{"de", 5}, {"nl", 25}});
  EXPECT_EQ(code_of([&] { rtp(kDe, m, t, langs, kEn); }), ErrorCode::incomplete_table);
  auto small = sims({kDe, kNl}, 0.4);
  auto full = table({{"de", 5}, {"nl", 25}, {"ru", 1}});
  EXPECT_EQ(code_of([&] { rtp(kDe, small, full, {kDe, kNl, kRu}, kEn); }), ErrorCode::incomplete_table);
}

TEST(BleuTable, RoundTripAndValidation) {
  TempDir dir;
  BleuTable t;
  t.set(kDe, {31.25, 33.5});
  t.set(kNl, {0.1, 100});
  save_bleu_table(t, dir.file("bleu.tsv"));
  auto u = load_bleu_table(dir.file("bleu.tsv"));
  EXPECT_EQ(u.scale, ScoreScale::percent);
  EXPECT_EQ(u.at(kDe).bilingual, 31.25);
  EXPECT_EQ(u.at(kNl).multilingual, 100.0);

  auto write = [&](const std::string& body) {
    std::ofstream(dir.file("t.tsv")) << body;
    return dir.file("t.tsv");
  };
  EXPECT_EQ(load_bleu_table(write("#scale=unit\nde\t0.3\t0.4\n")).scale, ScoreScale::unit);
  EXPECT_EQ(code_of([&] { load_bleu_table(write("de\t0.3\t0.4\n")); }), ErrorCode::invalid_argument);
  EXPECT_EQ(code_of([&] { load_bleu_table(write("#scale=unit\nde\t30\t40\n")); }), ErrorCode::invalid_argument);
  EXPECT_EQ(code_of([&] { load_bleu_table(write("#scale=bleu\n")); }), ErrorCode::invalid_argument);
  EXPECT_EQ(code_of([&] { load_bleu_table(write("#scale=percent\nde\t3x\t4\n")); }), ErrorCode::invalid_argument);
  EXPECT_EQ(code_of([&] { load_bleu_table(write("#scale=percent\nde\t3\t4\nde\t1\t1\n")); }),
            ErrorCode::invalid_argument);
}

// ---- similarity objective

TEST(XsimLoss, IdenticalAndOrthogonal) {
  Eigen::MatrixXd a(3, 2);
  a << 1, 2, -1, 0.5, 3, 3;
  EXPECT_NEAR(xsim_loss(a, a, false), 3.0, 1e-12);
  Eigen::MatrixXd b(2, 2), c(2, 2);
  b << 1, 0, 0, 1;
  c << 0, 4, -2, 0;
  EXPECT_EQ(xsim_loss(b, c, false), 0.0);
}

TEST(XsimLoss, HandCenteredBatch) {
  Eigen::MatrixXd a(2, 2), b(2, 2);
  a << 1, 0, 0, 1;
  b << 1, 1, 1, 0;
  EXPECT_NEAR(xsim_loss(a, b, false), 1.0 / std::sqrt(2.0), 1e-15);
  // batch mean (0.75, 0.5); centered rows a=(0.25,-0.5),(-0.75,0.5) b=(0.25,0.5),(0.25,-0.5)
  double first = (0.0625 - 0.25) / 0.3125;
  double second = (-0.1875 - 0.25) / std::sqrt(0.8125 * 0.3125);
  EXPECT_NEAR(first, -0.6, 1e-15);
  EXPECT_NEAR(xsim_loss(a, b, true), first + second, 1e-12);
}

TEST(XsimLoss, CenteringRemovesSharedOffsets) {
  Rng rng(8);
  Eigen::MatrixXd a(10, 6), b(10, 6);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal(), b.data()[i] = rng.normal();
  Eigen::RowVectorXd shift(6);
  for (Eigen::Index i = 0; i < 6; ++i) shift[i] = rng.normal() * 10;
  Eigen::MatrixXd as = a.rowwise() + shift, bs = b.rowwise() + shift;
  EXPECT_NEAR(xsim_loss(as, bs, true), xsim_loss(a, b, true), 1e-10);
  EXPECT_GT(std::abs(xsim_loss(as, bs, false) - xsim_loss(a, b, false)), 1e-3);
}

TEST(XsimLoss, ShapeMismatch) {
  EXPECT_EQ(code_of([] { xsim_loss(Eigen::MatrixXd(2, 3), Eigen::MatrixXd(3, 3), false); }),
            ErrorCode::shape_mismatch);
}

// ---- rank correlation

TEST(Spearman, Examples) {
  std::vector<double> x = {1, 2, 3, 4, 5}, up = {2, 4, 8, 9, 30}, down = {5, 4, 3, 2, 1};
  EXPECT_NEAR(spearman(x, up).rho, 1.0, 1e-15);
  EXPECT_NEAR(spearman(x, down).rho, -1.0, 1e-15);
  std::vector<double> a = {1, 2, 3}, b = {2, 1, 3};
  auto r = spearman(a, b);
  EXPECT_NEAR(r.rho, 0.5, 1e-15);
  EXPECT_EQ(r.n, 3u);
}

TEST(Spearman, AverageRanksForTies) {
  std::vector<double> v = {3, 1, 2, 2};
  EXPECT_EQ(average_ranks(v), (std::vector<double>{4, 1, 2.5, 2.5}));
  // ranks x=(1,2.5,2.5,4), y=(1,2,3,4): Pearson on ranks = 4.5 / sqrt(4.5 * 5)
  std::vector<double> x = {1, 2, 2, 3}, y = {1, 2, 3, 4};
  EXPECT_NEAR(spearman(x, y).rho, 4.5 / std::sqrt(4.5 * 5.0), 1e-15);
}

TEST(Spearman, InvariantUnderMonotoneTransforms) {
  Rng rng(9);
  std::vector<double> x(30), y(30);
  for (size_t i = 0; i < 30; ++i) x[i] = rng.normal(), y[i] = x[i] + rng.normal();
  double base = spearman(x, y).rho;
  auto ex = x, cy = y;
  for (auto& v : ex) v = std::exp(v);
  for (auto& v : cy) v = v * v * v - 7;
  EXPECT_EQ(spearman(ex, cy).rho, base);
}

TEST(Spearman, Errors) {
  std::vector<double> two = {1, 2}, three = {1, 2, 3}, flat = {4, 4, 4};
  EXPECT_EQ(code_of([&] { spearman(two, two); }), ErrorCode::insufficient_data);
  EXPECT_EQ(code_of([&] { spearman(two, three); }), ErrorCode::shape_mismatch);
  EXPECT_EQ(code_of([&] { spearman(three, flat); }), ErrorCode::insufficient_data);
}

}  // namespace
}  // namespace knnmt
