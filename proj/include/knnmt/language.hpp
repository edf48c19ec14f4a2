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

#include <compare>
#include <functional>
#include <string>
#include <string_view>

#include "knnmt/error.hpp"

namespace knnmt {

/// Short source/target language identifier such as "de" or "pt-br".
/// Must be non-empty ASCII lowercase; digits, '-' and '_' are allowed after the
/// first letter.
class LanguageTag {
 public:
  LanguageTag() = default;
  explicit LanguageTag(std::string code) : code_(std::move(code)) {
    require(valid(code_), ErrorCode::invalid_argument, "bad language tag '" + code_ + "'");
  }

  static bool valid(std::string_view code) {
    if (code.empty() || code.front() < 'a' || code.front() > 'z') return false;
    for (char c : code) {
      bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
      if (!ok) return false;
    }
    return true;
  }

  const std::string& code() const noexcept { return code_; }
  bool empty() const noexcept { return code_.empty(); }

  friend auto operator<=>(const LanguageTag&, const LanguageTag&) = default;
  friend bool operator==(const LanguageTag&, const LanguageTag&) = default;

 private:
  std::string code_;
};

}  // namespace knnmt

template <>
struct std::hash<knnmt::LanguageTag> {
  size_t operator()(const knnmt::LanguageTag& tag) const noexcept {
    return std::hash<std::string>{}(tag.code());
  }
};
