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

#include <span>
#include <vector>

#include "knnmt/decode/distribution.hpp"
#include "knnmt/vecstore/record.hpp"

namespace knnmt {

/// The translation model the retrieval component is attached to. It supplies
/// the next-token distribution and the context vector used as datastore key.
/// Implementations must be deterministic and safe for concurrent const use.
class BaseModel {
 public:
  virtual ~BaseModel() = default;

  virtual size_t vocab_size() const = 0;
  virtual size_t dim() const = 0;

  virtual VocabDistribution next_distribution(std::span<const TokenId> source,
                                              std::span<const TokenId> prefix) const = 0;

  virtual std::vector<float> featurize(std::span<const TokenId> source, std::span<const TokenId> prefix) const = 0;
};

}  // namespace knnmt
