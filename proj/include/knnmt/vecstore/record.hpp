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

#include <cstdint>
#include <vector>

#include "knnmt/language.hpp"

namespace knnmt {

using TokenId = uint32_t;

/// Reserved vocabulary ids.
inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kBosId = 1;
inline constexpr TokenId kEosId = 2;

/// One dumped translation context: the decoder state at `timestep` of
/// sentence `sentence_id` together with the target token produced there.
struct ReprRecord {
  std::vector<float> vector;
  TokenId token_id = 0;
  uint32_t sentence_id = 0;
  uint32_t timestep = 0;
  LanguageTag lang;
};

/// A retrieved datastore entry. `distance` is squared L2.
struct Neighbor {
  uint64_t entry_index = 0;
  double distance = 0.0;
  TokenId token_id = 0;
  LanguageTag lang;
};

}  // namespace knnmt
