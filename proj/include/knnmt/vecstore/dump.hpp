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

// RDMP1 representation dumps.
//
//   "RDMP1\0"                      6 bytes
//   u32 dim, u32 vocab_size
//   u32 lang length, lang bytes
//   u64 record count
//   records: u32 sentence_id, u16 timestep, u32 token_id, dim x f32
//
// All integers little-endian.

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "knnmt/binary_io.hpp"
#include "knnmt/error.hpp"
#include "knnmt/vecstore/record.hpp"

namespace knnmt {

inline constexpr std::array<char, 6> kDumpMagic = {'R', 'D', 'M', 'P', '1', '\0'};

struct DumpHeader {
  uint32_t dim = 0;
  uint32_t vocab_size = 0;
  LanguageTag lang;
  uint64_t count = 0;
};

inline void check_record(const ReprRecord& rec, uint32_t dim, uint32_t vocab_size) {
  if (rec.vector.size() != dim)
    fail(ErrorCode::malformed_dump, "record of length " + std::to_string(rec.vector.size()) +
                                        " in a d=" + std::to_string(dim) + " stream");
  if (rec.token_id >= vocab_size)
    fail(ErrorCode::malformed_dump, "token id " + std::to_string(rec.token_id) +
                                        " outside vocabulary of size " + std::to_string(vocab_size));
  if (rec.timestep > std::numeric_limits<uint16_t>::max())
    fail(ErrorCode::malformed_dump, "timestep does not fit the u16 field");
}

/// Streams records into an RDMP1 file. The record count is patched into the
/// header by close(), so the target must be seekable.
class DumpWriter {
 public:
  DumpWriter(const std::string& path, uint32_t dim, uint32_t vocab_size, LanguageTag lang)
      : out_(path, std::ios::binary | std::ios::trunc), dim_(dim), vocab_size_(vocab_size),
        lang_(std::move(lang)) {
    require(out_.good(), ErrorCode::io, "cannot open " + path + " for writing");
    require(dim > 0, ErrorCode::invalid_argument, "dump dimension must be positive");
    io::write_magic(out_, kDumpMagic);
    io::write_pod<uint32_t>(out_, dim_);
    io::write_pod<uint32_t>(out_, vocab_size_);
    io::write_string(out_, lang_.code());
    count_pos_ = out_.tellp();
    io::write_pod<uint64_t>(out_, 0);
  }

  DumpWriter(const DumpWriter&) = delete;
  DumpWriter& operator=(const DumpWriter&) = delete;

  ~DumpWriter() {
    if (!closed_) {
      try {
        close();
      } catch (...) {
      }
    }
  }

  void write(uint32_t sentence_id, uint32_t timestep, TokenId token_id, std::span<const float> v) {
    if (v.size() != dim_)
      fail(ErrorCode::malformed_dump, "record of length " + std::to_string(v.size()) +
                                          " in a d=" + std::to_string(dim_) + " stream");
    require(token_id < vocab_size_, ErrorCode::malformed_dump, "token id outside vocabulary");
    require(timestep <= std::numeric_limits<uint16_t>::max(), ErrorCode::malformed_dump,
            "timestep does not fit the u16 field");
    io::write_pod<uint32_t>(out_, sentence_id);
    io::write_pod<uint16_t>(out_, static_cast<uint16_t>(timestep));
    io::write_pod<uint32_t>(out_, token_id);
    io::write_span(out_, v);
    ++count_;
  }

  void write(const ReprRecord& rec) {
    require(rec.lang == lang_, ErrorCode::malformed_dump, "record language differs from dump language");
    write(rec.sentence_id, rec.timestep, rec.token_id, rec.vector);
  }

  uint64_t count() const noexcept { return count_; }

  void close() {
    if (closed_) return;
    closed_ = true;
    out_.seekp(count_pos_);
    io::write_pod<uint64_t>(out_, count_);
    out_.close();
    require(!out_.fail(), ErrorCode::io, "failed writing representation dump");
  }

 private:
  std::ofstream out_;
  uint32_t dim_;
  uint32_t vocab_size_;
  LanguageTag lang_;
  std::streampos count_pos_{};
  uint64_t count_ = 0;
  bool closed_ = false;
};

/// Sequential RDMP1 reader over any input stream.
class DumpReader {
 public:
  explicit DumpReader(std::istream& in) : in_(in) {
    try {
      io::expect_magic(in_, kDumpMagic, "RDMP1");
      header_.dim = io::read_pod<uint32_t>(in_, "dim");
      header_.vocab_size = io::read_pod<uint32_t>(in_, "vocab size");
      auto code = io::read_string(in_, "language code", 64);
      if (!LanguageTag::valid(code)) fail(ErrorCode::malformed_dump, "invalid language code in dump header");
      header_.lang = LanguageTag(code);
      header_.count = io::read_pod<uint64_t>(in_, "record count");
    } catch (const Error& e) {
      fail(ErrorCode::malformed_dump, e.what());
    }
    if (header_.dim == 0) fail(ErrorCode::malformed_dump, "dump declares dimension 0");
  }

  const DumpHeader& header() const noexcept { return header_; }

  /// Reads the next record into `rec`; false once `count` records were read.
  bool next(ReprRecord& rec) {
    if (read_ == header_.count) return false;
    try {
      rec.sentence_id = io::read_pod<uint32_t>(in_, "sentence id");
      rec.timestep = io::read_pod<uint16_t>(in_, "timestep");
      rec.token_id = io::read_pod<uint32_t>(in_, "token id");
      rec.vector.resize(header_.dim);
      io::read_span(in_, std::span<float>(rec.vector), "vector");
    } catch (const Error& e) {
      fail(ErrorCode::malformed_dump, "record " + std::to_string(read_) + ": " + e.what());
    }
    if (rec.token_id >= header_.vocab_size)
      fail(ErrorCode::malformed_dump, "token id outside declared vocabulary");
    rec.lang = header_.lang;
    ++read_;
    return true;
  }

 private:
  std::istream& in_;
  DumpHeader header_;
  uint64_t read_ = 0;
};

struct Dump {
  DumpHeader header;
  std::vector<ReprRecord> records;
};

inline Dump read_dump(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::io, "cannot open " + path);
  DumpReader reader(in);
  Dump dump;
  dump.header = reader.header();
  dump.records.reserve(static_cast<size_t>(std::min<uint64_t>(dump.header.count, 1u << 24)));
  ReprRecord rec;
  while (reader.next(rec)) dump.records.push_back(rec);
  return dump;
}

inline void write_dump(const std::string& path, uint32_t dim, uint32_t vocab_size, const LanguageTag& lang,
                       std::span<const ReprRecord> records) {
  DumpWriter writer(path, dim, vocab_size, lang);
  for (const auto& rec : records) writer.write(rec);
  writer.close();
}

}  // namespace knnmt
