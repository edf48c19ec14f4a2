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

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "knnmt/binary_io.hpp"
#include "knnmt/error.hpp"
#include "knnmt/language.hpp"

namespace knnmt {

/// Square map from `source_lang`'s representation space into `target_lang`'s.
/// Entries are stored row-major in f32; products accumulate in double.
struct LinearMap {
  uint32_t dim = 0;
  std::vector<float> matrix;
  LanguageTag source_lang;
  LanguageTag target_lang;
  double ridge = 0.0;

  static LinearMap identity(uint32_t dim, LanguageTag src = LanguageTag("und"), LanguageTag tgt = LanguageTag("und")) {
    LinearMap m{dim, std::vector<float>(static_cast<size_t>(dim) * dim, 0.0f), std::move(src), std::move(tgt), 0.0};
    for (uint32_t i = 0; i < dim; ++i) m.matrix[static_cast<size_t>(i) * dim + i] = 1.0f;
    return m;
  }

  float at(size_t row, size_t col) const noexcept { return matrix[row * dim + col]; }

  void apply(std::span<const float> v, std::span<float> out) const {
    require(v.size() == dim && out.size() == dim, ErrorCode::dimension_mismatch,
            "map of dimension " + std::to_string(dim) + " applied to vector of dimension " + std::to_string(v.size()));
    for (size_t r = 0; r < dim; ++r) {
      const float* row = &matrix[r * dim];
      double acc = 0.0;
      for (size_t c = 0; c < dim; ++c) acc += static_cast<double>(row[c]) * static_cast<double>(v[c]);
      out[r] = static_cast<float>(acc);
    }
  }

  std::vector<float> apply(std::span<const float> v) const {
    std::vector<float> out(dim);
    apply(v, out);
    return out;
  }

  bool finite() const noexcept {
    for (float x : matrix)
      if (!std::isfinite(x)) return false;
    return true;
  }
};

inline std::vector<float> apply_map(const LinearMap& map, std::span<const float> v) { return map.apply(v); }

// KLM1: "KLM1\0\0", u32 d, source code, target code (u32 length + bytes each),
// f64 ridge, d*d f32 row-major.
inline constexpr std::array<char, 6> kLinearMapMagic = {'K', 'L', 'M', '1', '\0', '\0'};

inline void save_linear_map(const LinearMap& map, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::io, "cannot open " + path + " for writing");
  io::write_magic(out, kLinearMapMagic);
  io::write_pod<uint32_t>(out, map.dim);
  io::write_string(out, map.source_lang.code());
  io::write_string(out, map.target_lang.code());
  io::write_pod<double>(out, map.ridge);
  io::write_span(out, std::span<const float>(map.matrix));
  out.close();
  require(!out.fail(), ErrorCode::io, "failed writing " + path);
}

inline LinearMap load_linear_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::io, "cannot open " + path);
  io::expect_magic(in, kLinearMapMagic, "KLM1");
  LinearMap map;
  map.dim = io::read_pod<uint32_t>(in, "dim");
  require(map.dim > 0 && map.dim <= 1u << 14, ErrorCode::corrupt_file, "implausible map dimension");
  auto src = io::read_string(in, "source language", 64);
  auto tgt = io::read_string(in, "target language", 64);
  require(LanguageTag::valid(src) && LanguageTag::valid(tgt), ErrorCode::corrupt_file, "invalid language code");
  map.source_lang = LanguageTag(src);
  map.target_lang = LanguageTag(tgt);
  map.ridge = io::read_pod<double>(in, "ridge");
  map.matrix.resize(static_cast<size_t>(map.dim) * map.dim);
  io::read_span(in, std::span<float>(map.matrix), "matrix");
  char extra;
  require(!in.read(&extra, 1), ErrorCode::corrupt_file, "trailing bytes after map");
  require(map.finite(), ErrorCode::corrupt_file, "map holds non-finite entries");
  return map;
}

}  // namespace knnmt
