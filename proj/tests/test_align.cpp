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

#include <Eigen/Dense>

#include "knnmt/align/fit.hpp"
#include "knnmt/vecstore.hpp"
#include "test_support.hpp"

namespace knnmt {
namespace {

using testing::random_vector;
using testing::TempDir;

Eigen::MatrixXd random_matrix(Rng& rng, size_t d) {
  Eigen::MatrixXd m(d, d);
  for (size_t r = 0; r < d; ++r)
    for (size_t c = 0; c < d; ++c) m(r, c) = rng.normal();
  return m;
}

Eigen::MatrixXd random_rotation(Rng& rng, size_t d) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_matrix(rng, d));
  return qr.householderQ();
}

std::vector<float> times(const Eigen::MatrixXd& a, std::span<const float> x) {
  std::vector<float> out(a.rows());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    double acc = 0;
    for (Eigen::Index c = 0; c < a.cols(); ++c) acc += a(r, c) * x[c];
    out[r] = static_cast<float>(acc);
  }
  return out;
}

PairedContexts exact_pairs(Rng& rng, const Eigen::MatrixXd& truth, size_t n) {
  PairedContexts p;
  p.dim = static_cast<uint32_t>(truth.rows());
  for (size_t i = 0; i < n; ++i) {
    auto x = random_vector(rng, p.dim);
    p.add(x, times(truth, x));
  }
  return p;
}

double frobenius_gap(const LinearMap& m, const Eigen::MatrixXd& truth) {
  double s = 0;
  for (size_t r = 0; r < m.dim; ++r)
    for (size_t c = 0; c < m.dim; ++c) s += std::pow(m.at(r, c) - truth(r, c), 2);
  return std::sqrt(s);
}

TEST(FitLinearMap, IdentityRecovery) {
  Rng rng(1);
  auto p = exact_pairs(rng, Eigen::MatrixXd::Identity(8, 8), 64);
  auto fit = fit_linear_map(p, 0.0);
  for (size_t r = 0; r < 8; ++r)
    for (size_t c = 0; c < 8; ++c) EXPECT_NEAR(fit.map.at(r, c), r == c ? 1.0 : 0.0, 1e-6);
  EXPECT_LT(fit.residual, 1e-8);
}

TEST(FitLinearMap, ExactLine) {
  PairedContexts p;
  p.dim = 1;
  for (float x : {1.f, 2.f, 3.f}) p.add(std::vector<float>{x}, std::vector<float>{2 * x});
  auto fit = fit_linear_map(p, 0.0);
  EXPECT_FLOAT_EQ(fit.map.at(0, 0), 2.0f);
}

TEST(FitLinearMap, RecoversRandomFullRankMap) {
  Rng rng(2);
  auto truth = random_matrix(rng, 16);
  auto p = exact_pairs(rng, truth, 200);
  EXPECT_LT(frobenius_gap(fit_linear_map(p, 0.0).map, truth), 1e-4);
  EXPECT_LT(frobenius_gap(fit_linear_map(p, default_ridge(p)).map, truth), 1e-4);
}

TEST(FitLinearMap, SingularWithoutRidge) {
  Rng rng(3);
  auto p = exact_pairs(rng, random_matrix(rng, 8), 5);  // n < d
  try {
    fit_linear_map(p, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::singular_system);
  }
  auto fit = fit_linear_map(p, default_ridge(p));
  EXPECT_TRUE(fit.map.finite());
}

TEST(FitLinearMap, ResidualVanishesOnNestedExactData) {
  Rng rng(4);
  auto truth = random_matrix(rng, 6);
  auto all = exact_pairs(rng, truth, 120);
  for (size_t n : {6u, 10u, 30u, 120u}) {
    PairedContexts sub;
    sub.dim = 6;
    for (size_t i = 0; i < n; ++i) sub.add(all.src_row(i), all.tgt_row(i));
    EXPECT_LE(fit_linear_map(sub, 0.0).residual, 1e-8) << n;
  }
}

TEST(FitLinearMap, InverseComposesToIdentity) {
  Rng rng(5);
  auto p = exact_pairs(rng, random_matrix(rng, 10) + 4.0 * Eigen::MatrixXd::Identity(10, 10), 100);
  auto fwd = fit_linear_map(p, 0.0).map;
  auto inv = fit_linear_map(p.swapped(), 0.0).map;
  for (size_t i = 0; i < p.rows(); ++i) {
    auto back = inv.apply(fwd.apply(p.src_row(i)));
    for (size_t j = 0; j < 10; ++j) EXPECT_NEAR(back[j], p.src_row(i)[j], 1e-3);
  }
}

TEST(ApplyMap, BasicIdentities) {
  Rng rng(6);
  auto v = random_vector(rng, 5);
  EXPECT_EQ(apply_map(LinearMap::identity(5), v), v);
  LinearMap m{5, {}, LanguageTag("aa"), LanguageTag("bb"), 0.0};
  for (int i = 0; i < 25; ++i) m.matrix.push_back(static_cast<float>(rng.normal()));
  for (float x : apply_map(m, std::vector<float>(5, 0.0f))) EXPECT_EQ(x, 0.0f);
  try {
    apply_map(m, std::vector<float>(4, 0.0f));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::dimension_mismatch);
  }
}

TEST(ApplyMap, ReproducesTrainingTargets) {
  Rng rng(7);
  auto p = exact_pairs(rng, random_matrix(rng, 12), 80);
  auto map = fit_linear_map(p, 0.0).map;
  for (size_t i = 0; i < p.rows(); ++i) {
    auto y = map.apply(p.src_row(i));
    for (size_t j = 0; j < 12; ++j) EXPECT_NEAR(y[j], p.tgt_row(i)[j], 1e-4);
  }
}

// Two single-language stores over the same target sentences: sentence s has
// `len(s)` timesteps with token (s + t) % vocab.
Datastore sentence_store(Rng& rng, const LanguageTag& lang, const std::vector<std::pair<uint32_t, uint32_t>>& sentences,
                         uint32_t dim, uint32_t token_shift = 0) {
  DatastoreBuilder b(dim, 100);
  for (auto [sid, len] : sentences)
    for (uint32_t t = 0; t < len; ++t) b.add(random_vector(rng, dim), (sid + t + token_shift) % 100, sid, t, lang);
  return std::move(b).finish({});
}

TEST(ExtractTrainingPairs, FullOverlap) {
  Rng rng(8);
  std::vector<std::pair<uint32_t, uint32_t>> sents = {{0, 3}, {1, 5}, {2, 4}};
  auto a = sentence_store(rng, LanguageTag("aa"), sents, 4);
  auto b = sentence_store(rng, LanguageTag("bb"), sents, 4);
  auto pairs = extract_training_pairs(a, b, {{0, 0}, {1, 1}, {2, 2}});
  EXPECT_EQ(pairs.rows(), a.size());
  EXPECT_EQ(pairs.source_lang, LanguageTag("aa"));
  // rows stay aligned by (sentence, timestep)
  EXPECT_TRUE(std::equal(pairs.src_row(3).begin(), pairs.src_row(3).end(), a.key(3).begin()));
  EXPECT_TRUE(std::equal(pairs.tgt_row(3).begin(), pairs.tgt_row(3).end(), b.key(3).begin()));
}

TEST(ExtractTrainingPairs, DisjointSentencesAreEmpty) {
  Rng rng(9);
  auto a = sentence_store(rng, LanguageTag("aa"), {{0, 3}, {1, 3}}, 4);
  auto b = sentence_store(rng, LanguageTag("bb"), {{5, 3}, {6, 3}}, 4);
  try {
    extract_training_pairs(a, b, {{0, 0}, {1, 1}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::empty_pairs);
  }
}

TEST(ExtractTrainingPairs, LengthAndTokenMismatches) {
  Rng rng(10);
  auto a = sentence_store(rng, LanguageTag("aa"), {{0, 3}, {1, 4}}, 4);
  auto b = sentence_store(rng, LanguageTag("bb"), {{0, 3}, {1, 5}}, 4);
  // sentence 1 differs in length and is dropped
  EXPECT_EQ(extract_training_pairs(a, b, {{0, 0}, {1, 1}}).rows(), 3u);
  // cross-aligned ids: lengths equal (3 vs 3) but tokens differ at every step
  auto c = sentence_store(rng, LanguageTag("cc"), {{7, 3}}, 4);
  EXPECT_THROW(extract_training_pairs(a, c, {{0, 7}}), Error);
}

TEST(ExtractTrainingPairs, RequiresSingleLanguageStores) {
  Rng rng(11);
  auto a = sentence_store(rng, LanguageTag("aa"), {{0, 3}}, 4);
  auto b = sentence_store(rng, LanguageTag("bb"), {{0, 3}}, 4);
  std::vector<Datastore> both = {a, b};
  auto merged = merge_datastores(both);
  EXPECT_THROW(extract_training_pairs(merged, b, {{0, 0}}), Error);
}

TEST(MapDatastore, IdentityAndInvariants) {
  Rng rng(12);
  auto store = sentence_store(rng, LanguageTag("aa"), {{0, 5}, {1, 6}}, 6);
  auto same = map_datastore(store, LinearMap::identity(6));
  for (int i = 0; i < 10; ++i) {
    auto q = random_vector(rng, 6);
    EXPECT_EQ(store.query(q, 3)[0].entry_index, same.query(q, 3)[0].entry_index);
  }
  auto bad = LinearMap::identity(5);
  EXPECT_THROW(map_datastore(store, bad), Error);

  Eigen::MatrixXd a = random_matrix(rng, 6);
  LinearMap m = LinearMap::identity(6);
  for (size_t r = 0; r < 6; ++r)
    for (size_t c = 0; c < 6; ++c) m.matrix[r * 6 + c] = static_cast<float>(a(r, c));
  auto mapped = map_datastore(store, m);
  ASSERT_EQ(mapped.size(), store.size());
  for (size_t i = 0; i < store.size(); ++i) {
    EXPECT_EQ(mapped.token(i), store.token(i));
    EXPECT_EQ(mapped.lang(i), store.lang(i));
    EXPECT_EQ(mapped.sentence_id(i), store.sentence_id(i));
  }
}

TEST(MapDatastore, InverseFitRestoresKeys) {
  Rng rng(13);
  auto store = sentence_store(rng, LanguageTag("aa"), {{0, 40}, {1, 40}, {2, 40}}, 8);
  Eigen::MatrixXd a = random_rotation(rng, 8) * 2.0 + 0.3 * random_matrix(rng, 8);
  LinearMap m = LinearMap::identity(8);
  for (size_t r = 0; r < 8; ++r)
    for (size_t c = 0; c < 8; ++c) m.matrix[r * 8 + c] = static_cast<float>(a(r, c));
  auto mapped = map_datastore(store, m);
  PairedContexts back;
  back.dim = 8;
  for (size_t i = 0; i < store.size(); ++i) back.add(mapped.key(i), store.key(i));
  auto inv = fit_linear_map(back, 0.0).map;
  auto restored = map_datastore(mapped, inv);
  for (size_t i = 0; i < store.size(); ++i)
    for (size_t j = 0; j < 8; ++j) EXPECT_NEAR(restored.key(i)[j], store.key(i)[j], 1e-3);
}

TEST(MapDatastore, RotatedLanguageRetrievalImproves) {
  // Token t has a centre c_t; language aa emits c_t + noise, language bb
  // emits R (c_t + noise). A map fitted on paired contexts should undo R.
  Rng rng(14);
  const uint32_t dim = 16, vocab = 60;
  std::vector<std::vector<float>> centre;
  for (uint32_t t = 0; t < vocab; ++t) centre.push_back(random_vector(rng, dim));
  auto rot = random_rotation(rng, dim);
  auto noisy = [&](uint32_t t) {
    auto v = centre[t];
    for (auto& x : v) x += static_cast<float>(0.15 * rng.normal());
    return v;
  };
  DatastoreBuilder ba(dim, vocab), bb(dim, vocab);
  for (uint32_t s = 0; s < 100; ++s)
    for (uint32_t t = 0; t < 6; ++t) {
      uint32_t tok = static_cast<uint32_t>(rng.below(vocab));
      ba.add(noisy(tok), tok, s, t, LanguageTag("aa"));
      bb.add(times(rot, noisy(tok)), tok, s, t, LanguageTag("bb"));
    }
  auto sa = std::move(ba).finish({}), sb = std::move(bb).finish({});
  SentenceAlignment ident;
  for (uint32_t s = 0; s < 100; ++s) ident.emplace_back(s, s);
  auto pairs = extract_training_pairs(sa, sb, ident);
  auto fwd = fit_linear_map(pairs, default_ridge(pairs)).map;            // aa -> bb
  auto inv = fit_linear_map(pairs.swapped(), default_ridge(pairs)).map;  // bb -> aa
  auto sb_in_aa = map_datastore(sb, inv);

  int raw = 0, mapped_query = 0, mapped_store = 0;
  for (int q = 0; q < 300; ++q) {
    uint32_t tok = static_cast<uint32_t>(rng.below(vocab));
    auto v = noisy(tok);
    raw += sb.query(v, 1)[0].token_id == tok;
    mapped_query += sb.query(fwd.apply(v), 1)[0].token_id == tok;
    mapped_store += sb_in_aa.query(v, 1)[0].token_id == tok;
  }
  EXPECT_GT(mapped_query, raw);
  EXPECT_GT(mapped_store, raw);
  EXPECT_GT(mapped_query, 250);
}

TEST(LinearMapFile, RoundTripAndMagic) {
  TempDir tmp;
  Rng rng(15);
  auto fit = fit_linear_map(exact_pairs(rng, random_matrix(rng, 4), 20), 0.5);
  fit.map.source_lang = LanguageTag("be");
  fit.map.target_lang = LanguageTag("ru");
  save_linear_map(fit.map, tmp.file("m.klm"));
  auto back = load_linear_map(tmp.file("m.klm"));
  EXPECT_EQ(back.dim, 4u);
  EXPECT_EQ(back.matrix, fit.map.matrix);
  EXPECT_EQ(back.ridge, 0.5);
  EXPECT_EQ(back.source_lang, LanguageTag("be"));
  {
    std::ofstream out(tmp.file("bad.klm"), std::ios::binary);
    out << "NOPE!!xxxxxxxx";
  }
  try {
    load_linear_map(tmp.file("bad.klm"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::corrupt_file);
  }
}

TEST(Alignment, FileAndTargetMatching) {
  TempDir tmp;
  SentenceAlignment a = {{0, 3}, {1, 4}, {7, 2}};
  save_alignment(a, tmp.file("a.tsv"));
  EXPECT_EQ(load_alignment(tmp.file("a.tsv")), a);
  {
    std::ofstream out(tmp.file("bad.tsv"));
    out << "1 2\n";
  }
  EXPECT_THROW(load_alignment(tmp.file("bad.tsv")), Error);
  auto m = align_by_target({"the cat", "a dog", "x"}, {"a dog", "y", "the cat"});
  SentenceAlignment want = {{0, 2}, {1, 0}};
  EXPECT_EQ(m, want);
}

}  // namespace
}  // namespace knnmt
