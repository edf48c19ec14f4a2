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

#include <fstream>
#include <sstream>

#include "knnmt/vecstore.hpp"
#include "test_support.hpp"

namespace knnmt {
namespace {

using testing::brute_force_knn;
using testing::random_records;
using testing::TempDir;

const LanguageTag kXX("xx");

std::vector<std::vector<float>> keys_of(const std::vector<ReprRecord>& recs) {
  std::vector<std::vector<float>> keys;
  for (const auto& r : recs) keys.push_back(r.vector);
  return keys;
}

IndexSpec cell_spec(uint32_t cells, uint32_t probe) {
  IndexSpec spec;
  spec.kind = IndexKind::cell_probe;
  spec.n_cells = cells;
  spec.n_probe = probe;
  return spec;
}

void expect_matches_oracle(const std::vector<Neighbor>& got, const std::vector<testing::OracleHit>& want) {
  ASSERT_EQ(got.size(), want.size());
  for (size_t i = 0; i < got.size(); ++i) {
    EXPECT_EQ(got[i].entry_index, want[i].index) << "rank " << i;
    EXPECT_EQ(got[i].distance, want[i].distance) << "rank " << i;
  }
}

TEST(BuildDatastore, PreservesCountAndProvenance) {
  Rng rng(1);
  auto recs = random_records(rng, 3, 4, 10, kXX);
  auto store = build_datastore(recs, 4, 10);
  EXPECT_EQ(store.dim(), 4u);
  EXPECT_EQ(store.size(), 3u);
  ASSERT_EQ(store.languages().size(), 1u);
  EXPECT_EQ(store.languages()[0].lang, kXX);
  EXPECT_EQ(store.languages()[0].count, 3u);
  for (size_t i = 0; i < recs.size(); ++i) {
    auto r = store.record(i);
    EXPECT_EQ(r.vector, recs[i].vector);
    EXPECT_EQ(r.token_id, recs[i].token_id);
  }
}

TEST(BuildDatastore, ShortRecordIsMalformed) {
  Rng rng(2);
  auto recs = random_records(rng, 3, 4, 10, kXX);
  recs[1].vector.resize(3);
  try {
    build_datastore(recs, 4, 10);
    FAIL() << "expected malformed-dump";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::malformed_dump);
  }
}

TEST(BuildDatastore, EmptyDumpIsRejected) {
  std::vector<ReprRecord> none;
  try {
    build_datastore(none, 4, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::empty_datastore);
  }
}

TEST(Dump, StreamRoundTripAndTruncation) {
  TempDir tmp;
  Rng rng(3);
  auto recs = random_records(rng, 20, 6, 50, kXX);
  write_dump(tmp.file("a.rdmp"), 6, 50, kXX, recs);

  std::ifstream in(tmp.file("a.rdmp"), std::ios::binary);
  DumpReader reader(in);
  EXPECT_EQ(reader.header().count, 20u);
  auto store = build_datastore(reader);
  ASSERT_EQ(store.size(), 20u);
  EXPECT_EQ(store.record(7).vector, recs[7].vector);
  EXPECT_EQ(store.timestep(7), recs[7].timestep);

  // drop the last few bytes: the final record is now shorter than d
  std::ifstream whole(tmp.file("a.rdmp"), std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(whole)), {});
  std::istringstream cut(bytes.substr(0, bytes.size() - 5));
  DumpReader truncated(cut);
  try {
    build_datastore(truncated);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::malformed_dump);
  }
}

TEST(Dump, WriterRejectsWrongDimension) {
  TempDir tmp;
  DumpWriter w(tmp.file("b.rdmp"), 4, 10, kXX);
  std::vector<float> v(3, 1.0f);
  EXPECT_THROW(w.write(0, 0, 1, v), Error);
}

TEST(Query, SelfRetrievalAndTieBreak) {
  std::vector<ReprRecord> recs = {
      {{1, 0}, 5, 0, 0, kXX}, {{0, 1}, 6, 0, 1, kXX}, {{0, -1}, 7, 0, 2, kXX}, {{3, 3}, 8, 0, 3, kXX}};
  auto store = build_datastore(recs, 2, 10);
  auto hit = store.query(std::vector<float>{3, 3}, 1);
  EXPECT_EQ(hit[0].distance, 0.0);
  EXPECT_EQ(hit[0].token_id, 8u);
  // origin is at distance 1 from entries 0, 1, 2: lower index wins
  auto tied = store.query(std::vector<float>{0, 0}, 3);
  EXPECT_EQ(tied[0].entry_index, 0u);
  EXPECT_EQ(tied[1].entry_index, 1u);
  EXPECT_EQ(tied[2].entry_index, 2u);
}

TEST(Query, ErrorPaths) {
  Rng rng(4);
  auto store = build_datastore(random_records(rng, 5, 3, 10, kXX), 3, 10);
  try {
    store.query(std::vector<float>(3, 0.f), 6);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::insufficient_entries);
  }
  try {
    store.query(std::vector<float>(4, 0.f), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::dimension_mismatch);
  }
}

TEST(Query, ExactScanMatchesLinearScanOracle) {
  for (uint64_t seed : {10u, 11u, 12u}) {
    Rng rng(seed);
    size_t n = 200 + rng.below(1500);
    size_t dim = 1 + rng.below(40);
    auto recs = random_records(rng, n, dim, 100, kXX, 0.15);
    auto store = build_datastore(recs, static_cast<uint32_t>(dim), 100);
    auto keys = keys_of(recs);
    for (int q = 0; q < 20; ++q) {
      size_t k = 1 + rng.below(std::min<size_t>(n, 70));
      std::vector<float> query = rng.uniform() < 0.3 ? keys[rng.below(n)] : testing::random_vector(rng, dim);
      expect_matches_oracle(store.query(query, k), brute_force_knn(keys, query, k));
    }
  }
}

TEST(Query, FullProbeEqualsExactScan) {
  Rng rng(20);
  auto recs = random_records(rng, 3000, 16, 50, kXX, 0.1);
  auto exact = build_datastore(recs, 16, 50);
  auto cells = exact.with_index(cell_spec(32, 32));
  EXPECT_EQ(cells.cell_index().n_cells(), 32u);
  for (int q = 0; q < 50; ++q) {
    auto query = testing::random_vector(rng, 16);
    auto a = exact.query(query, 25);
    auto b = cells.query(query, 25);
    ASSERT_EQ(a.size(), b.size());
    for (size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].entry_index, b[i].entry_index);
      EXPECT_EQ(a[i].distance, b[i].distance);
    }
  }
}

TEST(Query, PartialProbeStillReturnsK) {
  Rng rng(21);
  auto store = build_datastore(random_records(rng, 500, 8, 20, kXX), 8, 20, cell_spec(50, 1));
  auto hits = store.query(testing::random_vector(rng, 8), 40);
  ASSERT_EQ(hits.size(), 40u);
  for (size_t i = 1; i < hits.size(); ++i) EXPECT_LE(hits[i - 1].distance, hits[i].distance);
}

TEST(CellProbe, SeedsFromDistinctEntries) {
  // only three distinct keys: at most three cells can exist
  std::vector<ReprRecord> recs;
  for (int i = 0; i < 30; ++i) recs.push_back({{float(i % 3), 0.f}, 3, 0, 0, kXX});
  auto store = build_datastore(recs, 2, 10, cell_spec(8, 8));
  EXPECT_EQ(store.cell_index().n_cells(), 3u);
}

TEST(Merge, AdditiveProvenance) {
  Rng rng(30);
  auto a = build_datastore(random_records(rng, 10, 4, 10, LanguageTag("aa")), 4, 10);
  auto b = build_datastore(random_records(rng, 20, 4, 10, LanguageTag("bb")), 4, 10);
  std::vector<Datastore> both = {a, b};
  auto m = merge_datastores(both);
  EXPECT_EQ(m.size(), 30u);
  EXPECT_EQ(m.count(LanguageTag("aa")), 10u);
  EXPECT_EQ(m.count(LanguageTag("bb")), 20u);
  EXPECT_EQ(m.lang(12), LanguageTag("bb"));
}

TEST(Merge, SingleStoreIsIdentityUnderQuery) {
  Rng rng(31);
  auto a = build_datastore(random_records(rng, 100, 5, 10, kXX), 5, 10);
  std::vector<Datastore> one = {a};
  auto m = merge_datastores(one);
  for (int i = 0; i < 20; ++i) {
    auto q = testing::random_vector(rng, 5);
    auto x = a.query(q, 7);
    auto y = m.query(q, 7);
    for (size_t j = 0; j < x.size(); ++j) EXPECT_EQ(x[j].entry_index, y[j].entry_index);
  }
}

TEST(Merge, TopOneIsArgminOverInputs) {
  Rng rng(32);
  auto ra = random_records(rng, 300, 8, 30, LanguageTag("aa"));
  auto rb = random_records(rng, 400, 8, 30, LanguageTag("bb"));
  std::vector<Datastore> stores = {build_datastore(ra, 8, 30), build_datastore(rb, 8, 30)};
  auto merged = merge_datastores(stores);
  auto ka = keys_of(ra), kb = keys_of(rb);
  for (int i = 0; i < 100; ++i) {
    auto q = testing::random_vector(rng, 8);
    auto best_a = brute_force_knn(ka, q, 1)[0];
    auto best_b = brute_force_knn(kb, q, 1)[0];
    auto top = merged.query(q, 1)[0];
    EXPECT_EQ(top.distance, std::min(best_a.distance, best_b.distance));
    if (best_a.distance <= best_b.distance) {
      EXPECT_EQ(top.entry_index, best_a.index);
    } else {
      EXPECT_EQ(top.entry_index, ra.size() + best_b.index);
    }
  }
}

TEST(Merge, OrderInsensitiveDistances) {
  Rng rng(33);
  std::vector<Datastore> ab = {build_datastore(random_records(rng, 200, 6, 10, LanguageTag("aa"), 0.2), 6, 10),
                               build_datastore(random_records(rng, 150, 6, 10, LanguageTag("bb"), 0.2), 6, 10)};
  std::vector<Datastore> ba = {ab[1], ab[0]};
  auto m1 = merge_datastores(ab), m2 = merge_datastores(ba);
  for (int i = 0; i < 30; ++i) {
    auto q = testing::random_vector(rng, 6);
    auto x = m1.query(q, 16), y = m2.query(q, 16);
    for (size_t j = 0; j < x.size(); ++j) EXPECT_EQ(x[j].distance, y[j].distance);
  }
}

TEST(Merge, DimensionMismatch) {
  Rng rng(34);
  std::vector<Datastore> stores = {build_datastore(random_records(rng, 5, 4, 10, kXX), 4, 10),
                                   build_datastore(random_records(rng, 5, 3, 10, kXX), 3, 10)};
  try {
    merge_datastores(stores);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::incompatible_stores);
  }
}

TEST(Provenance, SingleLanguageIsUniform) {
  Rng rng(40);
  auto store = build_datastore(random_records(rng, 50, 4, 10, kXX), 4, 10);
  std::vector<ProvenanceQuery> qs = {{testing::random_vector(rng, 4), 5}, {testing::random_vector(rng, 4), 3}};
  auto stats = provenance_stats(store, qs);
  ASSERT_EQ(stats.size(), 1u);
  EXPECT_EQ(stats[0].p_obs, 1.0);
  EXPECT_EQ(stats[0].p_uni, 1.0);
  EXPECT_EQ(stats[0].ratio, 1.0);
}

TEST(Provenance, ConstructedGeometry) {
  // 90 "aa" entries clustered at the origin, 10 "bb" entries far away
  Rng rng(41);
  std::vector<ReprRecord> recs;
  for (int i = 0; i < 90; ++i) recs.push_back({testing::random_vector(rng, 3, 0.01), 1, 0, 0, LanguageTag("aa")});
  for (int i = 0; i < 10; ++i) {
    auto v = testing::random_vector(rng, 3, 0.01);
    v[0] += 100.f;
    recs.push_back({v, 2, 0, 0, LanguageTag("bb")});
  }
  auto store = build_datastore(recs, 3, 10);
  std::vector<ProvenanceQuery> qs;
  for (int i = 0; i < 25; ++i) qs.push_back({testing::random_vector(rng, 3, 0.02), 1});
  auto stats = provenance_stats(store, qs);
  ASSERT_EQ(stats.size(), 2u);
  EXPECT_EQ(stats[0].p_obs, 1.0);
  EXPECT_DOUBLE_EQ(stats[0].ratio, 1.0 / 0.9);
  EXPECT_EQ(stats[1].p_obs, 0.0);
  EXPECT_NEAR(stats[0].p_uni + stats[1].p_uni, 1.0, 1e-9);
}

TEST(Provenance, SelfQueriesOnIdenticallyDistributedLanguages) {
  Rng rng(42);
  auto recs = random_records(rng, 120, 8, 10, LanguageTag("aa"));
  auto more = random_records(rng, 60, 8, 10, LanguageTag("bb"));
  recs.insert(recs.end(), more.begin(), more.end());
  auto store = build_datastore(recs, 8, 10);
  std::vector<ProvenanceQuery> qs;
  for (const auto& r : recs) qs.push_back({r.vector, 1});
  auto stats = provenance_stats(store, qs);
  double obs = 0, uni = 0;
  for (const auto& s : stats) {
    EXPECT_NEAR(s.ratio, 1.0, 1e-12);
    obs += s.p_obs;
    uni += s.p_uni;
  }
  EXPECT_NEAR(obs, 1.0, 1e-9);
  EXPECT_NEAR(uni, 1.0, 1e-9);
}

TEST(Provenance, ZeroQueries) {
  Rng rng(43);
  auto store = build_datastore(random_records(rng, 5, 2, 10, kXX), 2, 10);
  try {
    provenance_stats(store, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::empty_input);
  }
}

TEST(DatastoreFile, RoundTripPreservesEntriesAndQueries) {
  TempDir tmp;
  Rng rng(50);
  auto recs = random_records(rng, 100, 12, 40, LanguageTag("aa"));
  auto extra = random_records(rng, 30, 12, 40, LanguageTag("bb"));
  std::vector<Datastore> parts = {build_datastore(recs, 12, 40), build_datastore(extra, 12, 40)};
  for (auto spec : {IndexSpec{}, cell_spec(8, 2)}) {
    auto store = merge_datastores(parts, spec);
    save_datastore(store, tmp.file("s.kds"));
    auto back = load_datastore(tmp.file("s.kds"));
    ASSERT_EQ(back.size(), store.size());
    EXPECT_EQ(back.dim(), store.dim());
    EXPECT_TRUE(std::equal(back.keys().begin(), back.keys().end(), store.keys().begin()));
    for (size_t i = 0; i < store.size(); ++i) {
      EXPECT_EQ(back.token(i), store.token(i));
      EXPECT_EQ(back.lang(i), store.lang(i));
      EXPECT_EQ(back.sentence_id(i), store.sentence_id(i));
      EXPECT_EQ(back.timestep(i), store.timestep(i));
    }
    ASSERT_EQ(back.languages().size(), 2u);
    EXPECT_EQ(back.count(LanguageTag("bb")), 30u);
    for (int q = 0; q < 100; ++q) {
      auto v = testing::random_vector(rng, 12);
      auto x = store.query(v, 10), y = back.query(v, 10);
      for (size_t j = 0; j < x.size(); ++j) {
        EXPECT_EQ(x[j].entry_index, y[j].entry_index);
        EXPECT_EQ(x[j].distance, y[j].distance);
      }
    }
  }
}

TEST(DatastoreFile, BadMagicAndTruncation) {
  TempDir tmp;
  Rng rng(51);
  auto store = build_datastore(random_records(rng, 10, 4, 10, kXX), 4, 10);
  save_datastore(store, tmp.file("s.kds"));
  std::ifstream in(tmp.file("s.kds"), std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), {});

  auto expect_corrupt = [](const std::string& data) {
    std::istringstream s(data);
    try {
      DatastoreFile::load(s);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::corrupt_file);
    }
  };
  std::string wrong = bytes;
  wrong[0] = 'X';
  expect_corrupt(wrong);
  expect_corrupt(bytes.substr(0, bytes.size() / 2));
  expect_corrupt(bytes + "junk");
}

TEST(DatastoreFile, ManifestSidecar) {
  TempDir tmp;
  write_manifest_sidecar(tmp.file("store.kds"), "whitespace", "toy corpus");
  std::ifstream in(tmp.file("store.manifest.json"));
  ASSERT_TRUE(in.good());
  auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j["tokenizer"], "whitespace");
}

}  // namespace
}  // namespace knnmt
