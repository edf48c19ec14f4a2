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

// KDS1 datastore files.
//
//   "KDS1\0\0"                           6 bytes
//   u32 dim, u32 vocab_size
//   u32 language count, then per language: u32 length, bytes, u64 entries
//   u64 record count
//   records: u32 sentence_id, u16 timestep, u32 token_id, u16 language, dim x f32
//   u8 index kind, u32 n_probe, u32 n_cells, u32 iterations, u32 max_train_per_cell
//   cell-probe only: u32 trained cells, cells x dim f32 centroids,
//                    record count x u32 cell
//
// A sidecar `<basename>.manifest.json` next to the file is informational.

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "knnmt/binary_io.hpp"
#include "knnmt/vecstore/datastore.hpp"

namespace knnmt {

inline constexpr std::array<char, 6> kDatastoreMagic = {'K', 'D', 'S', '1', '\0', '\0'};

struct DatastoreFile {
  static void save(const Datastore& s, std::ostream& out) {
    io::write_magic(out, kDatastoreMagic);
    io::write_pod<uint32_t>(out, s.dim_);
    io::write_pod<uint32_t>(out, s.vocab_size_);
    io::write_pod<uint32_t>(out, static_cast<uint32_t>(s.languages_.size()));
    for (const auto& lc : s.languages_) {
      io::write_string(out, lc.lang.code());
      io::write_pod<uint64_t>(out, lc.count);
    }
    io::write_pod<uint64_t>(out, s.size());
    for (size_t i = 0; i < s.size(); ++i) {
      io::write_pod<uint32_t>(out, s.sentence_ids_[i]);
      io::write_pod<uint16_t>(out, static_cast<uint16_t>(s.timesteps_[i]));
      io::write_pod<uint32_t>(out, s.tokens_[i]);
      io::write_pod<uint16_t>(out, s.lang_index_[i]);
      io::write_span(out, s.key(i));
    }
    io::write_pod<uint8_t>(out, static_cast<uint8_t>(s.spec_.kind));
    io::write_pod<uint32_t>(out, s.spec_.n_probe);
    io::write_pod<uint32_t>(out, s.spec_.n_cells);
    io::write_pod<uint32_t>(out, s.spec_.iterations);
    io::write_pod<uint32_t>(out, s.spec_.max_train_per_cell);
    if (s.spec_.kind == IndexKind::cell_probe) {
      io::write_pod<uint32_t>(out, static_cast<uint32_t>(s.cells_.n_cells()));
      io::write_span(out, s.cells_.centroids());
      io::write_span(out, s.cells_.assignment());
    }
  }

  static Datastore load(std::istream& in) {
    Datastore s;
    io::expect_magic(in, kDatastoreMagic, "KDS1");
    s.dim_ = io::read_pod<uint32_t>(in, "dim");
    s.vocab_size_ = io::read_pod<uint32_t>(in, "vocab size");
    require(s.dim_ > 0, ErrorCode::corrupt_file, "datastore declares dimension 0");
    auto n_langs = io::read_pod<uint32_t>(in, "language count");
    require(n_langs > 0 && n_langs < UINT16_MAX, ErrorCode::corrupt_file, "implausible language count");
    uint64_t declared = 0;
    for (uint32_t l = 0; l < n_langs; ++l) {
      auto code = io::read_string(in, "language code", 64);
      require(LanguageTag::valid(code), ErrorCode::corrupt_file, "invalid language code");
      auto count = io::read_pod<uint64_t>(in, "language count");
      s.languages_.push_back({LanguageTag(code), count});
      declared += count;
    }
    auto n = io::read_pod<uint64_t>(in, "record count");
    require(n == declared, ErrorCode::corrupt_file, "provenance table does not sum to the record count");
    require(n > 0, ErrorCode::corrupt_file, "datastore file holds no entries");
    s.keys_.resize(n * s.dim_);
    s.tokens_.resize(n);
    s.sentence_ids_.resize(n);
    s.timesteps_.resize(n);
    s.lang_index_.resize(n);
    std::vector<uint64_t> seen(n_langs, 0);
    for (uint64_t i = 0; i < n; ++i) {
      s.sentence_ids_[i] = io::read_pod<uint32_t>(in, "sentence id");
      s.timesteps_[i] = io::read_pod<uint16_t>(in, "timestep");
      s.tokens_[i] = io::read_pod<uint32_t>(in, "token id");
      s.lang_index_[i] = io::read_pod<uint16_t>(in, "language index");
      require(s.lang_index_[i] < n_langs, ErrorCode::corrupt_file, "language index out of range");
      require(s.tokens_[i] < s.vocab_size_, ErrorCode::corrupt_file, "token id outside vocabulary");
      ++seen[s.lang_index_[i]];
      io::read_span(in, std::span<float>(s.keys_).subspan(i * s.dim_, s.dim_), "key");
    }
    for (uint32_t l = 0; l < n_langs; ++l)
      require(seen[l] == s.languages_[l].count, ErrorCode::corrupt_file, "provenance counts disagree with entries");

    auto kind = io::read_pod<uint8_t>(in, "index kind");
    require(kind <= 1, ErrorCode::corrupt_file, "unknown index kind");
    s.spec_.kind = static_cast<IndexKind>(kind);
    s.spec_.n_probe = io::read_pod<uint32_t>(in, "n_probe");
    s.spec_.n_cells = io::read_pod<uint32_t>(in, "n_cells");
    s.spec_.iterations = io::read_pod<uint32_t>(in, "iterations");
    s.spec_.max_train_per_cell = io::read_pod<uint32_t>(in, "max_train_per_cell");
    if (s.spec_.kind == IndexKind::cell_probe) {
      auto cells = io::read_pod<uint32_t>(in, "trained cell count");
      require(cells > 0 && cells <= n, ErrorCode::corrupt_file, "implausible cell count");
      std::vector<float> centroids(static_cast<size_t>(cells) * s.dim_);
      io::read_span(in, std::span<float>(centroids), "centroids");
      std::vector<uint32_t> assignment(n);
      io::read_span(in, std::span<uint32_t>(assignment), "cell assignment");
      s.cells_ = CellProbeIndex::from_parts(s.dim_, s.spec_.n_probe, std::move(centroids), std::move(assignment));
    }
    char extra;
    require(!in.read(&extra, 1), ErrorCode::corrupt_file, "trailing bytes after datastore");
    return s;
  }
};

inline void save_datastore(const Datastore& store, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::io, "cannot open " + path + " for writing");
  DatastoreFile::save(store, out);
  out.close();
  require(!out.fail(), ErrorCode::io, "failed writing " + path);
}

inline Datastore load_datastore(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::io, "cannot open " + path);
  return DatastoreFile::load(in);
}

inline std::string manifest_sidecar_path(const std::string& path) {
  std::filesystem::path p(path);
  p.replace_extension(".manifest.json");
  return p.string();
}

inline void write_manifest_sidecar(const std::string& store_path, const std::string& tokenizer,
                                   const std::string& corpus_description) {
  nlohmann::json j;
  j["tokenizer"] = tokenizer;
  j["corpus"] = corpus_description;
  std::ofstream out(manifest_sidecar_path(store_path));
  require(out.good(), ErrorCode::io, "cannot write datastore manifest");
  out << j.dump(2) << '\n';
}

}  // namespace knnmt
