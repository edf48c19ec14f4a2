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

// Little-endian primitives shared by the RDMP1, KDS1 and KLM1 formats.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <type_traits>

#include "knnmt/error.hpp"

namespace knnmt::io {

static_assert(std::endian::native == std::endian::little,
              "binary formats are written with a little-endian host fast path");

template <class T>
  requires std::is_trivially_copyable_v<T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
  requires std::is_trivially_copyable_v<T>
void write_span(std::ostream& out, std::span<const T> values) {
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size_bytes()));
}

inline void write_string(std::ostream& out, const std::string& s) {
  write_pod<uint32_t>(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <class T>
  requires std::is_trivially_copyable_v<T>
T read_pod(std::istream& in, const char* what) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(T)))
    fail(ErrorCode::corrupt_file, std::string("truncated while reading ") + what);
  return value;
}

template <class T>
  requires std::is_trivially_copyable_v<T>
void read_span(std::istream& in, std::span<T> out, const char* what) {
  in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size_bytes()));
  if (in.gcount() != static_cast<std::streamsize>(out.size_bytes()))
    fail(ErrorCode::corrupt_file, std::string("truncated while reading ") + what);
}

inline std::string read_string(std::istream& in, const char* what, uint32_t max_len = 1u << 16) {
  auto len = read_pod<uint32_t>(in, what);
  if (len > max_len) fail(ErrorCode::corrupt_file, std::string("implausible length for ") + what);
  std::string s(len, '\0');
  read_span(in, std::span<char>(s.data(), s.size()), what);
  return s;
}

template <size_t N>
void write_magic(std::ostream& out, const std::array<char, N>& magic) {
  out.write(magic.data(), N);
}

template <size_t N>
void expect_magic(std::istream& in, const std::array<char, N>& magic, const char* format) {
  std::array<char, N> got{};
  in.read(got.data(), N);
  if (in.gcount() != static_cast<std::streamsize>(N) || got != magic)
    fail(ErrorCode::corrupt_file, std::string("bad magic, not a ") + format + " file");
}

}  // namespace knnmt::io
