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

#include <stdexcept>
#include <string>
#include <string_view>

namespace knnmt {

enum class ErrorCode {
  // input errors
  io,
  invalid_argument,
  malformed_dump,
  corrupt_file,
  empty_datastore,
  empty_input,
  empty_retrieval,
  empty_pairs,
  empty_corpus,
  empty_vocab,
  missing_keys,
  untrained_model,
  insufficient_entries,
  insufficient_data,
  incomplete_table,
  no_overlap,
  undefined_reference,
  // incompatibilities between otherwise valid inputs
  dimension_mismatch,
  incompatible_stores,
  shape_mismatch,
  misaligned_corpora,
  scale_mismatch,
  // numerical
  singular_system,
  // broken internal invariant
  internal,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::io: return "io";
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::malformed_dump: return "malformed-dump";
    case ErrorCode::corrupt_file: return "corrupt-file";
    case ErrorCode::empty_datastore: return "empty-datastore";
    case ErrorCode::empty_input: return "empty-input";
    case ErrorCode::empty_retrieval: return "empty-retrieval";
    case ErrorCode::empty_pairs: return "empty-pairs";
    case ErrorCode::empty_corpus: return "empty-corpus";
    case ErrorCode::empty_vocab: return "empty-vocab";
    case ErrorCode::missing_keys: return "missing-keys";
    case ErrorCode::untrained_model: return "untrained-model";
    case ErrorCode::insufficient_entries: return "insufficient-entries";
    case ErrorCode::insufficient_data: return "insufficient-data";
    case ErrorCode::incomplete_table: return "incomplete-table";
    case ErrorCode::no_overlap: return "no-overlap";
    case ErrorCode::undefined_reference: return "undefined-reference";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::incompatible_stores: return "incompatible-stores";
    case ErrorCode::shape_mismatch: return "shape-mismatch";
    case ErrorCode::misaligned_corpora: return "misaligned-corpora";
    case ErrorCode::scale_mismatch: return "scale-mismatch";
    case ErrorCode::singular_system: return "singular-system";
    case ErrorCode::internal: return "internal";
  }
  return "unknown";
}

/// Every library failure is reported as an Error carrying a code; the CLI maps
/// codes onto process exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace knnmt
